"""
Schema for experiment configuration documents.

Every serializer rejects keys it does not declare, including inside nested
sections, and a missing nested section is validated as ``{}`` so its field
defaults apply.
"""
from rest_framework import serializers

from environment.guard import DEFAULT_MAX_CHAIN
from environment.success import TASK_MODES
from evolve.config import STRATEGIES
from oracle.properties import DIRECTIONS

CONFIG_VERSION = 1
METHODS = ('pgpo', 'ga')


class StrictSerializer(serializers.Serializer):
    def to_internal_value(self, data):
        if not isinstance(data, dict):
            raise serializers.ValidationError({'non_field_errors': ['Expected an object.']})
        unknown = sorted(set(data) - set(self.fields))
        if unknown:
            raise serializers.ValidationError({key: ['Unknown setting.'] for key in unknown})
        data = dict(data)
        for name, field in self.fields.items():
            if isinstance(field, serializers.BaseSerializer) and name not in data:
                data[name] = {}
        return super().to_internal_value(data)


class PropertySerializer(StrictSerializer):
    name = serializers.CharField()
    direction = serializers.ChoiceField(choices=DIRECTIONS, required=False)
    weight = serializers.FloatField(min_value=0.0, required=False)
    threshold = serializers.FloatField(required=False)
    delta = serializers.FloatField(min_value=0.0, required=False)


class PropertyField(serializers.Field):
    """A property name or a mapping of registry overrides."""

    def to_internal_value(self, data):
        if isinstance(data, str):
            data = {'name': data}
        serializer = PropertySerializer(data=data)
        if not serializer.is_valid():
            raise serializers.ValidationError(serializer.errors)
        return dict(serializer.validated_data)

    def to_representation(self, value):
        return value


class RewardSerializer(StrictSerializer):
    invalid = serializers.FloatField(default=-0.5)
    unchanged = serializers.FloatField(default=-0.3)
    similarity_scale = serializers.FloatField(default=2.0, min_value=0.0)
    degradation_scale = serializers.FloatField(default=1.0, min_value=0.0)
    amplification = serializers.FloatField(default=5.0, min_value=0.0)
    success_bonus = serializers.FloatField(default=0.0, min_value=0.0)


class TaskSerializer(StrictSerializer):
    properties = serializers.ListField(child=PropertyField(), min_length=1, default=lambda: ['logp_proxy'])
    mode = serializers.ChoiceField(choices=TASK_MODES, default='auto')
    gamma = serializers.FloatField(default=0.4, min_value=0.0, max_value=1.0)
    budget = serializers.IntegerField(default=500, min_value=1)
    horizon = serializers.IntegerField(default=5, min_value=1)
    max_chain = serializers.IntegerField(default=DEFAULT_MAX_CHAIN, min_value=1, allow_null=True)
    # property name -> path of a SMILES<TAB>score table
    tables = serializers.DictField(child=serializers.CharField(), default=dict)
    rewards = RewardSerializer()

    def validate_properties(self, value):
        names = [entry['name'] for entry in value]
        if len(set(names)) != len(names):
            raise serializers.ValidationError('Each property may appear once.')
        return value


class PGPOSerializer(StrictSerializer):
    clip_epsilon = serializers.FloatField(default=0.2)
    discount = serializers.FloatField(default=0.99)
    gae_lambda = serializers.FloatField(default=0.95)
    lambda_pref = serializers.FloatField(default=0.3, min_value=0.0)
    max_pairs = serializers.IntegerField(default=6, min_value=0)
    pair_keep_ratio = serializers.FloatField(default=0.75)
    learning_rate = serializers.FloatField(default=5e-5)
    minibatch_size = serializers.IntegerField(default=32, min_value=1)
    max_grad_norm = serializers.FloatField(default=1.0)
    epochs = serializers.IntegerField(default=1, min_value=1)


class TrainingSerializer(StrictSerializer):
    iterations = serializers.IntegerField(default=100, min_value=0)
    rollouts_per_lead = serializers.IntegerField(default=16, min_value=1)
    leads_per_iteration = serializers.IntegerField(default=None, min_value=1, allow_null=True)
    filtering = serializers.BooleanField(default=True)
    variance_keep_ratio = serializers.FloatField(default=0.5)
    score_keep_ratio = serializers.FloatField(default=0.75)
    beta = serializers.FloatField(default=0.1, min_value=0.0)
    tau = serializers.FloatField(default=0.9)
    init_scale = serializers.FloatField(default=0.0, min_value=0.0)
    pgpo = PGPOSerializer()

    def validate(self, attrs):
        for name in ('variance_keep_ratio', 'score_keep_ratio'):
            if not 0 < attrs[name] <= 1:
                raise serializers.ValidationError({name: ['Must lie in (0, 1].']})
        if attrs['tau'] <= 0:
            raise serializers.ValidationError({'tau': ['Must be positive.']})
        return attrs


class InferenceSerializer(StrictSerializer):
    generations = serializers.IntegerField(default=10, min_value=1)
    rollouts_per_parent = serializers.IntegerField(default=32, min_value=1)
    tau_base = serializers.FloatField(default=0.9)
    tau_step = serializers.FloatField(default=0.1, min_value=0.0)
    tau_max = serializers.FloatField(default=2.0)
    pool_capacity = serializers.IntegerField(default=5, min_value=1)
    elite_gamma = serializers.FloatField(default=0.4, min_value=0.0, max_value=1.0)
    weights = serializers.DictField(child=serializers.FloatField(), default=dict)
    strategy = serializers.ChoiceField(choices=STRATEGIES, default='evolutionary')

    def validate(self, attrs):
        if attrs['tau_base'] > attrs['tau_max']:
            raise serializers.ValidationError({'tau_base': ['Must not exceed tau_max.']})
        return attrs


class LeadsSerializer(StrictSerializer):
    # None uses POLO_LEADS_FILE
    file = serializers.CharField(default=None, allow_null=True)
    train = serializers.IntegerField(default=128, min_value=0)
    test = serializers.IntegerField(default=64, min_value=1)


class ExperimentSerializer(StrictSerializer):
    version = serializers.IntegerField(default=CONFIG_VERSION)
    name = serializers.CharField(default='experiment')
    seed = serializers.IntegerField(default=0, min_value=0)
    method = serializers.ChoiceField(choices=METHODS, default='pgpo')
    workers = serializers.IntegerField(default=1, min_value=1)
    leads = LeadsSerializer()
    task = TaskSerializer()
    training = TrainingSerializer()
    inference = InferenceSerializer()

    def validate_version(self, value):
        if value != CONFIG_VERSION:
            raise serializers.ValidationError(f'Unsupported config version {value}; expected {CONFIG_VERSION}.')
        return value
