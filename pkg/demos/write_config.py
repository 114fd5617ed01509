"""Emit the standard scenario as a config file for the CLI pipeline.

The written JSON is self-contained (generator matrix, bias, centroids,
and cluster centers all spelled out), so the file alone reproduces the
experiment anywhere.

Usage: python demos/write_config.py [seed] [path]
"""

import json
import sys

from wolfsearch.presets import standard_experiment_config


def main() -> None:
    seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
    path = sys.argv[2] if len(sys.argv) > 2 else "standard_experiment.json"
    with open(path, "w") as fh:
        json.dump(standard_experiment_config(seed), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {path} (seed {seed}); now run, in order:")
    for step in ("synth", "lve", "eval", "density"):
        print(f"  wolfsearch {step} --config {path} --out run{seed}")


if __name__ == "__main__":
    main()
