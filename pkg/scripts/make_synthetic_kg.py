"""Write a block-structured synthetic KG in the train.txt triple format."""

import argparse
from pathlib import Path

from causalkg.kg import synthetic_kg, write_triples


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data/synthetic", help="output directory")
    ap.add_argument("--entities", type=int, default=2000)
    ap.add_argument("--relations", type=int, default=11)
    ap.add_argument("--triples", type=int, default=10000)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    triples = synthetic_kg(a.entities, a.relations, a.triples, seed=a.seed)
    write_triples(triples, out / "train.txt")
    print(f"{len(triples)} triples -> {out / 'train.txt'}")


if __name__ == "__main__":
    main()
