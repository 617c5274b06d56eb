"""factories.py."""

import factory

from attacks.presets import AttackConfig
from core.providers.manifolds.circles import CirclesConfig
from core.providers.manifolds.hemisphere import HemisphereConfig
from network.optim import SgdState
from training.loops import Method, TrainRun
from training.rules import AssignmentRule


class HemisphereConfigFactory(factory.Factory):
    """Factory for small hemisphere datasets."""

    class Meta:
        model = HemisphereConfig

    ambient_dim = 10
    num_classes = 4
    train_size = 64
    test_size = 32
    seed = factory.Sequence(lambda n: n)


class CirclesConfigFactory(factory.Factory):
    """Factory for small concentric-circles datasets."""

    class Meta:
        model = CirclesConfig

    n_per_class = 40
    test_per_class = 20
    radius_inner = 1.0
    radius_outer = 2.0
    gap = 0.85
    noise_std = 0.05
    seed = factory.Sequence(lambda n: n)


class AttackConfigFactory(factory.Factory):
    """Factory for a short PGD attack with a random start."""

    class Meta:
        model = AttackConfig

    epsilon = 0.1
    steps = 5
    step_size = factory.LazyAttribute(lambda o: o.epsilon / 4)
    random_start = True
    clip = None
    restarts = 1


class SgdStateFactory(factory.Factory):
    class Meta:
        model = SgdState

    learning_rate = 0.1
    momentum = 0.9
    weight_decay = 0.0
    schedule = ()


class AssignmentRuleFactory(factory.Factory):
    class Meta:
        model = AssignmentRule

    kind = "quartile"
    epsilon = 0.1


class TrainRunFactory(factory.Factory):
    """Factory for a few-epoch training run on a small network."""

    class Meta:
        model = TrainRun

    method = Method.STANDARD_AT
    hidden = (16,)
    optimizer = factory.SubFactory(SgdStateFactory)
    epochs = 3
    batch_size = 16
    attack = factory.SubFactory(AttackConfigFactory)
    rule = None
    robust_every = 0
    seed = 0
