"""Write every classification fixture as a scenario JSON file usable by the CLI."""
import argparse
import json
from pathlib import Path

from radplasma.canonical import classify
from radplasma.fixtures import row_fixtures


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", nargs="?", default="fixtures")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for (t, r), sc in sorted(row_fixtures().items()):
        path = out / f"table{t}_row{r}.json"
        path.write_text(json.dumps(sc.to_dict(), indent=2) + "\n")
        c = classify(sc)
        print(f"{path}: classified as table {c.case.table} row {c.case.row}")


if __name__ == "__main__":
    main()
