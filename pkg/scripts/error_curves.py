"""Error curves E0, E1, Einf for the planted split of a few SBM graphs, both priors."""
import argparse

from infocut.cli import main

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--out", default="results/error_curves")
parser.add_argument("--n", type=int, default=16)
parser.add_argument("--p-minus", default="0.02")
parser.add_argument("--seeds", type=int, default=3)
args = parser.parse_args()

for seed in range(args.seeds):
    graph = f"{args.out}/sbm_n{args.n}_seed{seed}.json"
    main(["generate", "--n", str(args.n), "--p-minus", args.p_minus, "--seed", str(seed), "--output", graph])
    main(["errors", graph, "--prior", "uniform,degree", "--out", f"{args.out}/seed{seed}"])
