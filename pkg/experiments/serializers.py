"""Serializers validating experiment documents before any work starts."""

from typing import Any, Mapping

from rest_framework import serializers

from attacks.presets import PRESETS
from evaluation.analysis import SlicePlane
from training.loops import Method
from training.rules import RuleKind

PRESET_CHOICES = sorted(PRESETS)


class StrictSerializer(serializers.Serializer):
    """Serializer that rejects keys it does not declare."""

    def to_internal_value(self: "StrictSerializer", data: Any) -> Any:
        """Reject unknown keys, then validate as usual."""
        if isinstance(data, Mapping):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError(
                    {key: ["Unknown field."] for key in unknown}
                )
        return super().to_internal_value(data)


class DatasetSerializer(StrictSerializer):
    """Which manifold to sample and how many points."""

    kind = serializers.ChoiceField(choices=["hemisphere", "circles"], default="hemisphere")
    ambient_dim = serializers.IntegerField(min_value=3, default=100)
    num_classes = serializers.IntegerField(min_value=2, default=4)
    train_size = serializers.IntegerField(min_value=1, default=2000)
    test_size = serializers.IntegerField(min_value=1, default=1000)
    n_per_class = serializers.IntegerField(min_value=1, default=500)
    test_per_class = serializers.IntegerField(min_value=1, default=500)
    radius_inner = serializers.FloatField(min_value=0.0, default=1.0)
    radius_outer = serializers.FloatField(min_value=0.0, default=2.0)
    gap = serializers.FloatField(default=0.85)
    noise_std = serializers.FloatField(min_value=0.0, default=0.05)

    def validate(self: "DatasetSerializer", attrs: dict) -> dict:
        """Circles live in ℝ³ with two classes."""
        if not 0 < attrs["radius_inner"] < attrs["radius_outer"]:
            raise serializers.ValidationError("need 0 < radius_inner < radius_outer")
        if attrs["kind"] == "circles":
            attrs["ambient_dim"] = 3
            attrs["num_classes"] = 2
        return attrs


class NetworkSerializer(StrictSerializer):
    """Hidden widths of the classifier."""

    hidden = serializers.ListField(
        child=serializers.IntegerField(min_value=1), default=lambda: [128, 128]
    )


class OptimizerSerializer(StrictSerializer):
    learning_rate = serializers.FloatField(default=0.1)
    momentum = serializers.FloatField(min_value=0.0, default=0.9)
    weight_decay = serializers.FloatField(min_value=0.0, default=0.0002)
    lr_milestones = serializers.ListField(
        child=serializers.IntegerField(min_value=0), default=lambda: [30, 45]
    )
    lr_divisor = serializers.FloatField(default=10.0)
    epochs = serializers.IntegerField(min_value=0, default=50)
    batch_size = serializers.IntegerField(min_value=1, default=128)

    def validate(self: "OptimizerSerializer", attrs: dict) -> dict:
        """Positive rate and divisor, momentum below 1."""
        if attrs["learning_rate"] <= 0:
            raise serializers.ValidationError({"learning_rate": "must be positive"})
        if attrs["momentum"] >= 1:
            raise serializers.ValidationError({"momentum": "must be below 1"})
        if attrs["lr_divisor"] <= 0:
            raise serializers.ValidationError({"lr_divisor": "must be positive"})
        return attrs


class AttackSerializer(StrictSerializer):
    epsilon = serializers.FloatField(min_value=0.0, default=0.03)
    train_preset = serializers.ChoiceField(choices=PRESET_CHOICES, default="train-pgd10")
    eval_presets = serializers.ListField(
        child=serializers.ChoiceField(choices=PRESET_CHOICES),
        default=lambda: ["eval-pgd20"],
    )
    restarts = serializers.IntegerField(min_value=1, default=1)
    clip = serializers.ListField(
        child=serializers.FloatField(),
        min_length=2,
        max_length=2,
        allow_null=True,
        default=None,
    )

    def validate_clip(self: "AttackSerializer", value: Any) -> Any:
        """A [lo, hi] pair with lo ≤ hi."""
        if value is not None and value[0] > value[1]:
            raise serializers.ValidationError("clip bounds are inverted")
        return value


class TrainingSerializer(StrictSerializer):
    method = serializers.ChoiceField(choices=[m.value for m in Method], default="tart")
    rule = serializers.ChoiceField(choices=[k.value for k in RuleKind], default="quartile")
    robust_every = serializers.IntegerField(min_value=0, default=0)


class TangentSerializer(StrictSerializer):
    source = serializers.ChoiceField(choices=["exact", "autoencoder"], default="exact")
    samples_per_dim = serializers.IntegerField(min_value=2, default=8)
    latent_spread = serializers.FloatField(default=0.05)
    include_center = serializers.BooleanField(default=True)
    baseline_draws = serializers.IntegerField(min_value=1, default=1000)

    def validate_latent_spread(self: "TangentSerializer", value: float) -> float:
        """Spread must be positive."""
        if value <= 0:
            raise serializers.ValidationError("must be positive")
        return value


class AutoencoderSerializer(StrictSerializer):
    latent_dim = serializers.IntegerField(min_value=1, default=2)
    hidden = serializers.ListField(
        child=serializers.IntegerField(min_value=1), default=lambda: [64]
    )
    epochs = serializers.IntegerField(min_value=0, default=30)
    learning_rate = serializers.FloatField(default=0.01)
    momentum = serializers.FloatField(min_value=0.0, default=0.9)
    batch_size = serializers.IntegerField(min_value=1, default=128)

    def validate(self: "AutoencoderSerializer", attrs: dict) -> dict:
        """Positive rate and momentum below 1."""
        if attrs["learning_rate"] <= 0:
            raise serializers.ValidationError({"learning_rate": "must be positive"})
        if attrs["momentum"] >= 1:
            raise serializers.ValidationError({"momentum": "must be below 1"})
        return attrs


class AnalysisSerializer(StrictSerializer):
    grid_resolution = serializers.IntegerField(min_value=1, default=200)
    grid_extent = serializers.FloatField(default=2.5)
    loss_tc_batches = serializers.IntegerField(min_value=1, default=200)
    histogram_bins = serializers.IntegerField(min_value=1, default=30)
    slices = serializers.ListField(
        child=serializers.CharField(), default=lambda: ["x3=0.85", "x2=0"]
    )

    def validate_slices(self: "AnalysisSerializer", value: list) -> list:
        """Every slice parses as a plane."""
        for text in value:
            try:
                SlicePlane.parse(text)
            except ValueError as error:
                raise serializers.ValidationError(str(error)) from error
        return value


SECTIONS = {
    "dataset": DatasetSerializer,
    "model": NetworkSerializer,
    "optimizer": OptimizerSerializer,
    "attack": AttackSerializer,
    "training": TrainingSerializer,
    "tangent": TangentSerializer,
    "autoencoder": AutoencoderSerializer,
    "analysis": AnalysisSerializer,
}


class ExperimentSerializer(StrictSerializer):
    """A whole experiment document."""

    name = serializers.RegexField(r"^[A-Za-z0-9_.-]+$", default="experiment")
    seeds = serializers.ListField(
        child=serializers.IntegerField(min_value=0),
        min_length=1,
        default=lambda: [0, 1, 2, 3, 4],
    )
    output_dir = serializers.CharField(allow_blank=True, default="")
    dataset = DatasetSerializer()
    model = NetworkSerializer()
    optimizer = OptimizerSerializer()
    attack = AttackSerializer()
    training = TrainingSerializer()
    tangent = TangentSerializer()
    autoencoder = AutoencoderSerializer()
    analysis = AnalysisSerializer()

    def to_internal_value(self: "ExperimentSerializer", data: Any) -> Any:
        """Missing or empty sections take every default."""
        if isinstance(data, Mapping):
            data = dict(data)
            for section in SECTIONS:
                if data.get(section) is None:
                    data[section] = {}
        return super().to_internal_value(data)

    def validate_seeds(self: "ExperimentSerializer", value: list) -> list:
        """At least one seed and no repeats."""
        if len(set(value)) != len(value):
            raise serializers.ValidationError("seeds must be distinct")
        return value

    def validate(self: "ExperimentSerializer", attrs: dict) -> dict:
        """Cross-section checks."""
        latent = attrs["autoencoder"]["latent_dim"]
        estimated = attrs["tangent"]["source"] == "autoencoder"
        if estimated and latent >= attrs["dataset"]["ambient_dim"]:
            raise serializers.ValidationError(
                {"autoencoder": {"latent_dim": "must be below the ambient dimension"}}
            )
        return attrs
