"""
DRF serializers for run configuration documents.

A run configuration is one JSON document. Every section is validated here,
before any command touches the filesystem; the first error is reported as a
ConfigError carrying its dotted field path (e.g. ``abr.alpha``).
"""
from rest_framework import serializers

from abr.config import AbrConfig
from baselines.config import METHODS as BASELINE_METHODS, BaselineConfig
from core.exceptions import ConfigError
from envs.generation import resolve_behavior
from nn.network import HIDDEN_ACTIVATIONS

from .environments import ENV_KINDS, default_behavior, make_env

ALL_METHODS = ('abr',) + BASELINE_METHODS


class StrictSerializer(serializers.Serializer):
    """
    Serializer that rejects keys it does not declare.

    Sections listed in ``optional_sections`` are filled with an empty object
    when absent, so their own field defaults still apply.
    """

    optional_sections = ()

    def to_internal_value(self, data):
        if isinstance(data, dict):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: ['Unknown field.'] for key in unknown})
            data = {**{name: {} for name in self.optional_sections}, **data}
        return super().to_internal_value(data)


# =============================================================================
# SECTION SERIALIZERS
# =============================================================================


class EnvSerializer(StrictSerializer):
    kind = serializers.ChoiceField(choices=ENV_KINDS)
    behavior = serializers.CharField(required=False)

    def validate(self, attrs):
        attrs.setdefault('behavior', default_behavior(attrs['kind']))
        try:
            resolve_behavior(make_env(attrs['kind']), attrs['behavior'])
        except ConfigError as e:
            raise serializers.ValidationError({'behavior': [e.message]})
        return attrs


class DatasetSerializer(StrictSerializer):
    path = serializers.CharField(required=False)
    n_transitions = serializers.IntegerField(min_value=1, default=10_000)
    seed = serializers.IntegerField(min_value=0, default=0)


class EvaluationSerializer(StrictSerializer):
    episodes = serializers.IntegerField(min_value=1, default=10)
    reference_episodes = serializers.IntegerField(min_value=1, required=False)


class Td3Serializer(StrictSerializer):
    """
    Optional overrides of Td3Config fields.

    Fields left out keep the dataclass defaults; seeds and evaluation episodes
    come from their own sections.
    """

    config_class = None

    gamma = serializers.FloatField(required=False)
    tau = serializers.FloatField(required=False)
    policy_noise_sd = serializers.FloatField(required=False)
    noise_clip = serializers.FloatField(required=False)
    policy_delay = serializers.IntegerField(required=False)
    clip_targets = serializers.BooleanField(required=False)
    batch_size = serializers.IntegerField(required=False)
    total_steps = serializers.IntegerField(required=False)
    lr_actor = serializers.FloatField(required=False)
    lr_critic = serializers.FloatField(required=False)
    hidden_sizes = serializers.ListField(
        child=serializers.IntegerField(min_value=1), min_length=1, required=False
    )
    hidden_activation = serializers.ChoiceField(choices=HIDDEN_ACTIVATIONS, required=False)
    log_every = serializers.IntegerField(required=False)
    eval_every = serializers.IntegerField(required=False)

    def validate(self, attrs):
        if 'hidden_sizes' in attrs:
            attrs['hidden_sizes'] = tuple(attrs['hidden_sizes'])
        try:
            self.config_class(**attrs).validate()
        except ConfigError as e:
            raise serializers.ValidationError({e.field: [e.message]})
        return attrs


class AbrSerializer(Td3Serializer):
    config_class = AbrConfig

    alpha = serializers.FloatField(required=False)
    beta = serializers.FloatField(required=False)
    num_samples = serializers.IntegerField(required=False)


class BaselineSerializer(Td3Serializer):
    config_class = BaselineConfig

    alpha_fixed = serializers.FloatField(required=False)


# =============================================================================
# RUN SERIALIZERS
# =============================================================================


class RunSerializer(StrictSerializer):
    """Sections shared by `train` and `sweep` configurations."""

    optional_sections = ('dataset', 'evaluation', 'abr', 'baseline')

    env = EnvSerializer()
    dataset = DatasetSerializer()
    evaluation = EvaluationSerializer()
    abr = AbrSerializer()
    baseline = BaselineSerializer()
    seeds = serializers.ListField(
        child=serializers.IntegerField(min_value=0), min_length=1, default=lambda: [0]
    )
    out_dir = serializers.CharField(required=False)

    def validate_seeds(self, value):
        if len(set(value)) != len(value):
            raise serializers.ValidationError('Seeds must be unique.')
        return value


class TrainRunSerializer(RunSerializer):
    method = serializers.ChoiceField(choices=ALL_METHODS)


class SweepGridSerializer(StrictSerializer):
    methods = serializers.ListField(
        child=serializers.ChoiceField(choices=ALL_METHODS), min_length=1, default=lambda: ['abr']
    )
    alphas = serializers.ListField(
        child=serializers.FloatField(min_value=0), min_length=1, default=lambda: [0.15]
    )
    betas = serializers.ListField(
        child=serializers.FloatField(min_value=0), min_length=1, default=lambda: [1.0]
    )
    num_samples = serializers.ListField(
        child=serializers.IntegerField(min_value=1), min_length=1, default=lambda: [1]
    )


class SweepRunSerializer(RunSerializer):
    optional_sections = RunSerializer.optional_sections + ('grid',)

    grid = SweepGridSerializer()


# =============================================================================
# ERROR REPORTING
# =============================================================================


def flatten_errors(detail, prefix=''):
    """Yield (dotted path, message) pairs from a DRF error structure."""
    if isinstance(detail, dict):
        for key, value in detail.items():
            if key == 'non_field_errors':
                path = prefix
            else:
                path = f'{prefix}.{key}' if prefix else str(key)
            yield from flatten_errors(value, path)
    elif isinstance(detail, list):
        for item in detail:
            yield from flatten_errors(item, prefix)
    else:
        yield prefix, str(detail)


def validate_run_config(data, serializer_class):
    """
    Validate a run configuration document.

    Returns:
        The serializer's validated data

    Raises:
        ConfigError: naming the first invalid field by its dotted path
    """
    serializer = serializer_class(data=data)
    if not serializer.is_valid():
        path, message = next(flatten_errors(serializer.errors))
        raise ConfigError(message, path or None)
    return serializer.validated_data
