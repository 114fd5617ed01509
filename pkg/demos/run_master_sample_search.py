"""Walk through one full master-sample attack on the standard scenario.

Builds the synthetic identity space, runs the latent search against a
cosine verifier over the full enrollment database, then answers the two
questions that matter: does the found sample match far more identities
than a zero-effort impostor would, and does it sit in the dense core of
the embedding cloud?

Usage: python demos/run_master_sample_search.py [seed]
"""

import sys

import numpy as np

from wolfsearch import (
    Matcher,
    MatcherSpec,
    density_report,
    evaluate_master,
    generate,
    run_lve,
)
from wolfsearch.presets import (
    EMBED_DIM,
    standard_lve_config,
    standard_system,
    standard_world,
)


def main(seed: int = 0) -> None:
    mixture, full, dev, ev, gen_spec = standard_world(seed)
    print(f"world seed {seed}: {len(full)} templates, "
          f"{len(full.identities())} identities, "
          f"{len(mixture.clusters)} clusters on the arc")

    config = standard_lve_config(seed, (standard_system(full),), gen_spec)
    print(f"searching: population {config.population}, "
          f"{config.iterations} iterations, latent dim {gen_spec.latent_dim}")
    result = run_lve(config)
    print(f"  best aggregate similarity {result.best_score:.4f} "
          f"at iteration {result.best_iteration}")
    print(f"  first iteration gave {result.iteration_best_scores[0]:.4f}; "
          f"the optimizer earned {result.best_score - result.iteration_best_scores[0]:+.4f}")

    with Matcher(MatcherSpec("cosine", EMBED_DIM)) as matcher:
        report = evaluate_master(result.best_embedding, dev, ev, matcher)
    print(f"\nthreshold from dev split EER: {report.threshold:.4f} "
          f"(EER {report.eer:.3f})")
    print(f"  normal impostor FMR on eval: {report.normal_fmr_eval:.4f}")
    print(f"  master sample FMR on eval:   {report.master_fmr_eval:.4f}")
    ratio = report.master_fmr_eval / max(report.normal_fmr_eval, 1e-12)
    print(f"  -> the master matches {ratio:.1f}x as often; "
          f"attack success = {report.success}")
    names = [ident for ident, _ in report.matched_identities[:5]]
    print(f"  {report.n_matched} eval identities matched; strongest: {names}")

    dens = density_report(result.best_embedding, full.matrix)
    rng = np.random.Generator(np.random.PCG64(seed + 777))
    baseline = generate(gen_spec, rng.standard_normal(gen_spec.latent_dim))
    base_dens = density_report(baseline, full.matrix)
    print(f"\ndensity percentile among enrolled embeddings "
          f"(PCA 2-D, Scott bandwidth):")
    print(f"  master sample:  {dens.percentile:.3f}")
    print(f"  random latent:  {base_dens.percentile:.3f}")
    print("the search converges on the crowded part of identity space, "
          "which is exactly what makes one sample match many people.")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 0)
