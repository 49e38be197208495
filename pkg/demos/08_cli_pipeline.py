#!/usr/bin/env python3
"""The four-verb command-line pipeline, end to end.

generate writes seeded circuit files, run evolves them across a chi
grid with the oracle on, analyze fits the fidelity decays, and emit
produces plot-ready tables. Everything lands in one run directory
whose manifest records each file; identical seeds reproduce identical
bytes.
"""
import json
import pathlib
import subprocess
import sys
import tempfile

PIPELINE = [
    ["run", "--rows", "3", "--cols", "3", "--depth", "12",
     "--sequence", "fsim", "--theta", "1.5707963267948966",
     "--phi", "0.5235987755982988", "--chi", "2,4", "--instances", "2",
     "--seed", "11", "--oracle", "--out", None],
    ["analyze", "--run", None],
    ["emit", "--run", None, "--kind", "fidelity_vs_depth"],
    ["emit", "--run", None, "--kind", "spectra"],
]


def supeps(args):
    cmd = [sys.executable, "-c",
           "import sys; from supeps.cli import main; sys.exit(main())"]
    print(f"$ supeps {' '.join(args)}")
    out = subprocess.run(cmd + args, capture_output=True, text=True)
    sys.stdout.write(out.stdout)
    if out.returncode != 0:
        sys.stderr.write(out.stderr)
        raise SystemExit(out.returncode)
    return out.stdout


def main():
    with tempfile.TemporaryDirectory() as tmp:
        run_dir = str(pathlib.Path(tmp) / "run")
        for template in PIPELINE:
            args = [run_dir if a is None else a for a in template]
            supeps(args)

        manifest = json.loads(
            (pathlib.Path(run_dir) / "manifest.json").read_text())
        print(f"\nmanifest status: {manifest['status']}, "
              f"config hash {manifest['config_hash'][:12]}...")
        for category, rels in sorted(manifest["files"].items()):
            if rels:
                print(f"  {category}: {len(rels)} file(s), e.g. {rels[0]}")

        fits = json.loads((pathlib.Path(run_dir) / "fits.json").read_text())
        print("\nfitted decay per chi:")
        for chi, fit in sorted(fits["per_chi"].items(),
                               key=lambda kv: int(kv[0])):
            if "error" in fit:
                print(f"  chi={chi}: {fit['error']}")
            else:
                print(f"  chi={chi}: d_tr={fit['d_tr']:.2f}  "
                      f"eps/layer={fit['epsilon_layer']:.3f}")


if __name__ == "__main__":
    main()
