#!/usr/bin/env python3
"""Convert the CiteULike users.dat / mult.dat files to the row-per-entry TSVs
read by the bundled configs.

users.dat: one line per user, "<count> <item> <item> ...".
mult.dat:  one line per item, "<count> <term>:<freq> ...".
"""
import argparse
from pathlib import Path


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("source", type=Path, help="directory holding users.dat and mult.dat")
    parser.add_argument("target", type=Path, help="output directory")
    args = parser.parse_args()
    args.target.mkdir(parents=True, exist_ok=True)

    with open(args.source / "users.dat") as src, open(args.target / "interactions.tsv", "w") as out:
        for user, line in enumerate(src):
            for item in line.split()[1:]:
                out.write(f"{user}\t{item}\n")

    mult = args.source / "mult.dat"
    if mult.exists():
        with open(mult) as src, open(args.target / "item_features.tsv", "w") as out:
            for item, line in enumerate(src):
                for pair in line.split()[1:]:
                    term, freq = pair.split(":")
                    out.write(f"{item}\t{term}\t{freq}\n")


if __name__ == "__main__":
    main()
