"""Write every fixture model and query as JSON files under fixtures/."""
import argparse
import json
from pathlib import Path

from percentile.fixtures import corpus
from percentile.io import model_to_json, query_to_json


def export(out: Path):
    out.mkdir(parents=True, exist_ok=True)
    index = {}
    for name, (mdp, queries) in corpus().items():
        (out / ("%s.model.json" % name)).write_text(json.dumps(model_to_json(mdp), indent=2) + "\n")
        index[name] = {}
        for qname, (query, expected) in queries.items():
            fname = "%s.%s.query.json" % (name, qname)
            (out / fname).write_text(json.dumps(query_to_json(query, mdp), indent=2) + "\n")
            index[name][qname] = {"query": fname, "expected": expected}
    (out / "index.json").write_text(json.dumps(index, indent=2) + "\n")
    return index


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "fixtures"))
    args = ap.parse_args(argv)
    index = export(Path(args.out))
    print("wrote %d models, %d queries to %s" % (len(index), sum(map(len, index.values())), args.out))


if __name__ == "__main__":
    main()
