"""Experiment documents: YAML in, validated config object out."""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

import yaml
from django.conf import settings
from rest_framework import serializers

from attacks.presets import AttackConfig, from_preset
from core.datasets import DatasetSplit
from core.providers.manifolds.circles import CirclesConfig, sample_concentric_circles
from core.providers.manifolds.hemisphere import HemisphereConfig, sample_hemisphere
from evaluation.analysis import SlicePlane
from experiments.serializers import ExperimentSerializer
from network.optim import SgdState, milestone_schedule
from tangent.estimation import SamplingSpec
from training.loops import Method, TrainRun
from training.rules import AssignmentRule

RESOLVED_NAME = "config.resolved.yaml"


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment document with every default filled in."""

    data: Dict[str, Any]
    source: Optional[Path] = field(default=None, compare=False)

    def section(self: "ExperimentConfig", name: str) -> Dict[str, Any]:
        """One validated section of the document."""
        return self.data[name]

    @property
    def name(self: "ExperimentConfig") -> str:
        """Experiment name."""
        return self.data["name"]

    @property
    def seeds(self: "ExperimentConfig") -> List[int]:
        """Trial seeds in document order."""
        return list(self.data["seeds"])

    @property
    def output_dir(self: "ExperimentConfig") -> Path:
        """Absolute run directory; relative paths live under ``TART_RUNS_DIR``."""
        path = Path(self.data["output_dir"] or self.name)
        return path if path.is_absolute() else Path(settings.TART_RUNS_DIR) / path

    @property
    def method(self: "ExperimentConfig") -> Method:
        """Training method."""
        return Method(self.data["training"]["method"])

    @property
    def uses_autoencoder(self: "ExperimentConfig") -> bool:
        """Whether tangents are estimated rather than exact."""
        return self.data["tangent"]["source"] == "autoencoder"

    def dataset_split(self: "ExperimentConfig", seed: int) -> DatasetSplit:
        """Sample the train/test split of trial ``seed``."""
        dataset = self.data["dataset"]
        if dataset["kind"] == "circles":
            return sample_concentric_circles(
                CirclesConfig(
                    n_per_class=dataset["n_per_class"],
                    test_per_class=dataset["test_per_class"],
                    radius_inner=dataset["radius_inner"],
                    radius_outer=dataset["radius_outer"],
                    gap=dataset["gap"],
                    noise_std=dataset["noise_std"],
                    seed=seed,
                )
            )
        return sample_hemisphere(
            HemisphereConfig(
                ambient_dim=dataset["ambient_dim"],
                num_classes=dataset["num_classes"],
                train_size=dataset["train_size"],
                test_size=dataset["test_size"],
                seed=seed,
            )
        )

    def _clip(self: "ExperimentConfig") -> Optional[tuple]:
        clip = self.data["attack"]["clip"]
        return None if clip is None else (float(clip[0]), float(clip[1]))

    def training_attack(self: "ExperimentConfig") -> AttackConfig:
        """Attack used inside training, at the document's ε."""
        attack = self.data["attack"]
        return from_preset(
            attack["train_preset"], attack["epsilon"], clip=self._clip(), restarts=1
        )

    def eval_attacks(self: "ExperimentConfig") -> Dict[str, AttackConfig]:
        """Evaluation attacks keyed by preset name, in document order."""
        attack = self.data["attack"]
        return {
            name: from_preset(
                name, attack["epsilon"], clip=self._clip(), restarts=attack["restarts"]
            )
            for name in attack["eval_presets"]
        }

    def optimizer_state(self: "ExperimentConfig") -> SgdState:
        """Fresh classifier optimizer with its milestone schedule."""
        optimizer = self.data["optimizer"]
        return SgdState(
            learning_rate=optimizer["learning_rate"],
            momentum=optimizer["momentum"],
            weight_decay=optimizer["weight_decay"],
            schedule=milestone_schedule(optimizer["lr_milestones"], optimizer["lr_divisor"]),
        )

    def autoencoder_state(self: "ExperimentConfig") -> SgdState:
        """Fresh autoencoder optimizer."""
        autoencoder = self.data["autoencoder"]
        return SgdState(
            learning_rate=autoencoder["learning_rate"], momentum=autoencoder["momentum"]
        )

    def sampling_spec(self: "ExperimentConfig") -> SamplingSpec:
        """Decoder sampling settings for estimated tangents."""
        tangent = self.data["tangent"]
        return SamplingSpec(
            samples_per_dim=tangent["samples_per_dim"],
            latent_spread=tangent["latent_spread"],
            include_center=tangent["include_center"],
        )

    def assignment_rule(self: "ExperimentConfig") -> AssignmentRule:
        """Budget rule at the training ε."""
        return AssignmentRule(self.data["training"]["rule"], self.data["attack"]["epsilon"])

    def train_run(self: "ExperimentConfig", seed: int) -> TrainRun:
        """The training run of trial ``seed``."""
        return TrainRun(
            method=self.method,
            hidden=tuple(self.data["model"]["hidden"]),
            optimizer=self.optimizer_state(),
            epochs=self.data["optimizer"]["epochs"],
            batch_size=self.data["optimizer"]["batch_size"],
            attack=self.training_attack(),
            rule=self.assignment_rule() if self.method is Method.TART else None,
            robust_every=self.data["training"]["robust_every"],
            seed=seed,
        )

    def slices(self: "ExperimentConfig") -> List[SlicePlane]:
        """Planes for the decision-boundary grids."""
        return [SlicePlane.parse(text) for text in self.data["analysis"]["slices"]]

    def resolved_yaml(self: "ExperimentConfig") -> str:
        """The document with defaults filled in, as YAML."""
        return yaml.safe_dump(self.data, sort_keys=False, default_flow_style=None)

    def write_resolved(self: "ExperimentConfig") -> Path:
        """Echo the resolved document into the run directory."""
        self.output_dir.mkdir(parents=True, exist_ok=True)
        path = self.output_dir / RESOLVED_NAME
        path.write_text(self.resolved_yaml())
        return path


def parse_config(
    document: Mapping[str, Any], source: Optional[Path] = None
) -> ExperimentConfig:
    """Validate a parsed document; raises ``serializers.ValidationError``."""
    serializer = ExperimentSerializer(data=document)
    serializer.is_valid(raise_exception=True)
    # Plain dicts and lists all the way down.
    data = json.loads(json.dumps(serializer.validated_data))
    return ExperimentConfig(data=data, source=source)


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read and validate a YAML experiment document."""
    path = Path(path)
    try:
        document = yaml.safe_load(path.read_text())
    except yaml.YAMLError as error:
        raise serializers.ValidationError({"document": [f"{path}: {error}"]}) from error
    if document is None:
        document = {}
    if not isinstance(document, Mapping):
        raise serializers.ValidationError({"document": [f"{path}: expected a mapping"]})
    return parse_config(document, source=path)
