"""Build the per-example tangent caches."""

from typing import Any, Dict, List

from experiments.config import ExperimentConfig
from experiments.management.base import StageCommand


def _angles(summary: Dict[str, float]) -> str:
    return (
        f"min {summary['minimum']:.2f}° mean {summary['mean']:.2f}° "
        f"max {summary['maximum']:.2f}°"
    )


class Command(StageCommand):
    help = "Build the TATC tangent cache of each seed (exact or autoencoder-estimated)."
    stage = "build_cache"

    def report(
        self: "Command", config: ExperimentConfig, reports: List[Dict[str, Any]]
    ) -> None:
        for report in reports:
            ratio = report["cache_bytes"] / report["dense_bytes"]
            self.stdout.write(
                f"seed {report['seed']}: {report['entries']} {report['source']} entries, "
                f"{report['cache_bytes']} bytes ({ratio:.3%} of dense projectors)"
            )
            timing = report["timing"]
            self.stdout.write(
                f"  tangential components: cached {timing['cached_seconds']:.4f}s, "
                f"rebuilt {timing['recomputed_seconds']:.4f}s "
                f"({timing['speedup']:.1f}x)"
            )
            if "angles" in report:
                self.stdout.write(f"  largest principal angle: {_angles(report['angles'])}")
                self.stdout.write(
                    f"  random subspaces:        {_angles(report['random_baseline'])}"
                )
