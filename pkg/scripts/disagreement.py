"""Disagreement between the min-cut and max-information bisections across p_minus."""
import argparse

from infocut.cli import main

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--out", default="results/disagreement")
parser.add_argument("--n-graphs", default="100")
parser.add_argument("--prior", default="uniform")
args = parser.parse_args()

main(["compare", "--n", "32", "--p-minus", "0,0.1,0.12,0.14,0.16", "--n-graphs", args.n_graphs,
      "--prior", args.prior, "--out", args.out])
