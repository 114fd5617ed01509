"""Drive the search through an out-of-process matcher.

This file plays both sides of the line protocol. Run it plainly and it
spawns a copy of itself with ``--serve`` as the oracle child, runs the
same small search once with the built-in cosine matcher and once
through the subprocess, and shows the two agree to double precision.
The child is deliberately dependency-free: anything that can read
"MATCH <e> <floats...>" from stdin and print "SCORE <s>" can stand in
for a real verification system.

Usage: python demos/external_oracle.py
"""

import math
import sys

from wolfsearch import (
    GeneratorSpec,
    LveConfig,
    MatcherSpec,
    OracleEndpoint,
    SystemSpec,
    run_lve,
    sample_enrollment,
)
from wolfsearch.synth import ClusterSpec, MixtureSpec

DIM = 8


def serve() -> None:
    """Oracle child: a cosine matcher speaking the wire protocol."""
    for line in sys.stdin:
        fields = line.split()
        if not fields:
            continue
        if fields[0] != "MATCH":
            print("ERR only MATCH is implemented", flush=True)
            continue
        e = int(fields[1])
        values = [float(tok) for tok in fields[2:]]
        if len(values) != 2 * e:
            print("ERR bad payload length", flush=True)
            continue
        p, t = values[:e], values[e:]
        np_ = math.sqrt(sum(v * v for v in p))
        nt = math.sqrt(sum(v * v for v in t))
        if np_ == 0.0 or nt == 0.0:
            print("ERR zero vector", flush=True)
            continue
        score = sum(a * b for a, b in zip(p, t)) / (np_ * nt)
        print(f"SCORE {score!r}", flush=True)


def main() -> None:
    mixture = MixtureSpec(
        embed_dim=DIM,
        clusters=(
            ClusterSpec([2.0] + [0.0] * (DIM - 1), sigma=0.4, weight=0.6),
            ClusterSpec([0.0, 2.0] + [0.0] * (DIM - 2), sigma=0.4, weight=0.4),
        ),
        identities=20,
        items_per_identity=2,
        within_identity_sigma=0.2,
        seed=1,
    )
    enrollment = sample_enrollment(mixture)
    generator = GeneratorSpec("identity", DIM, DIM)

    def search(matcher_spec):
        return run_lve(
            LveConfig(
                generator=generator,
                systems=(SystemSpec(matcher_spec, enrollment, name="demo"),),
                population=12,
                iterations=25,
                seed=0,
            )
        )

    internal = search(MatcherSpec("cosine", DIM))
    print(f"internal cosine matcher: best score {internal.best_score!r}")

    endpoint = OracleEndpoint(
        command=(sys.executable, __file__, "--serve"),
        verbs=frozenset({"MATCH"}),
        embed_dim=DIM,
        timeout_ms=10000,
    )
    external = search(MatcherSpec("external", DIM, external=endpoint))
    print(f"external oracle matcher: best score {external.best_score!r}")

    gap = abs(internal.best_score - external.best_score)
    print(f"difference: {gap:.2e}")
    print("the protocol carries shortest round-trip decimals, so an "
          "oracle doing the same arithmetic lands on the same optimum.")


if __name__ == "__main__":
    if len(sys.argv) > 1 and sys.argv[1] == "--serve":
        serve()
    else:
        main()
