# cli/serializers.py
import math

from rest_framework import serializers

from compartments import model_from_dict
from coupling import couple_from_dict
from poisson import PoissonStructure
from solver.exact import BUILDERS, NODES
from solver.integrators import POLICIES

SYSTEM_FORMS = ("hamiltonian", "ode")
INTEGRATORS = ("rk4", "DOP853", "RK45")


def _positive(name, value):
    if not (value > 0.0) or not math.isfinite(value):
        raise serializers.ValidationError(f"{name} must be positive, got {value}")
    return value


class FlowSerializer(serializers.Serializer):
    to = serializers.CharField()
    rate = serializers.CharField()

    def get_fields(self):
        # "from" is a keyword, so it cannot be declared as a class attribute
        fields = super().get_fields()
        fields["from"] = serializers.CharField()
        return fields


class PoissonSerializer(serializers.Serializer):
    dim = serializers.IntegerField(min_value=1, required=False)
    vars = serializers.ListField(child=serializers.CharField(), allow_empty=False)
    brackets = serializers.DictField(child=serializers.CharField(), default=dict)


class ModelConfigSerializer(serializers.Serializer):
    """
    Either {"builtin": name, "params": {...}} or the flow-arrow schema
    {"compartments": [...], "params": {...}, "flows": [...], "distinguished": ...}.
    An optional "poisson" key carries a structure to verify instead of the
    canonical one.
    """
    builtin = serializers.CharField(required=False)
    name = serializers.CharField(required=False, allow_blank=True)
    compartments = serializers.ListField(child=serializers.CharField(), required=False, allow_empty=False)
    flows = FlowSerializer(many=True, required=False)
    # builtin params may be rate expressions (phi1='mu*I'); the model checks them
    params = serializers.DictField(default=dict)
    distinguished = serializers.CharField(required=False, allow_null=True)
    poisson = PoissonSerializer(required=False)

    def validate(self, attrs):
        if ("builtin" in attrs) == ("compartments" in attrs):
            raise serializers.ValidationError("give exactly one of 'builtin' or 'compartments'")
        try:
            attrs["model"] = model_from_dict(attrs)
        except ValueError as exc:
            raise serializers.ValidationError({"builtin" if "builtin" in attrs else "flows": str(exc)}) from exc
        if "poisson" in attrs:
            try:
                attrs["structure"] = PoissonStructure.from_dict(attrs["poisson"], name="config")
            except ValueError as exc:
                raise serializers.ValidationError({"poisson": str(exc)}) from exc
            if attrs["structure"].variables != attrs["model"].compartments:
                raise serializers.ValidationError({"poisson": "vars must list the model compartments in order"})
        return attrs


class TransferSerializer(serializers.Serializer):
    a = serializers.IntegerField(min_value=1)
    b = serializers.IntegerField(min_value=1)
    rate = serializers.CharField()


class InteractingSerializer(serializers.Serializer):
    populations = ModelConfigSerializer(many=True, allow_empty=False)
    transfers = TransferSerializer(many=True, default=list)
    params = serializers.DictField(child=serializers.FloatField(), default=dict)
    name = serializers.CharField(default="interacting")

    def validate(self, attrs):
        try:
            attrs["system"] = couple_from_dict(attrs)
        except ValueError as exc:
            raise serializers.ValidationError({"transfers": str(exc)}) from exc
        return attrs


class IntegrationSerializer(serializers.Serializer):
    method = serializers.ChoiceField(choices=INTEGRATORS, default="rk4")
    t_end = serializers.FloatField(default=100.0)
    dt = serializers.FloatField(default=0.01)
    rtol = serializers.FloatField(default=1e-8)
    atol = serializers.FloatField(default=1e-10)
    samples = serializers.IntegerField(min_value=2, default=1001)
    domain_exit = serializers.ChoiceField(choices=POLICIES, required=False, allow_null=True)

    def validate_t_end(self, value):
        return _positive("t_end", value)

    def validate_dt(self, value):
        return _positive("dt", value)

    def validate_rtol(self, value):
        return _positive("rtol", value)

    def validate_atol(self, value):
        return _positive("atol", value)


class SimulateSerializer(IntegrationSerializer):
    model = ModelConfigSerializer()
    initial = serializers.ListField(child=serializers.FloatField(), allow_empty=False)
    system = serializers.ChoiceField(choices=SYSTEM_FORMS, default="hamiltonian")

    def validate(self, attrs):
        dim = attrs["model"]["model"].dim
        if len(attrs["initial"]) != dim:
            raise serializers.ValidationError({"initial": f"expected {dim} values, got {len(attrs['initial'])}"})
        return attrs


class ExactSerializer(serializers.Serializer):
    model = ModelConfigSerializer()
    s0 = serializers.FloatField(default=0.99)
    t_end = serializers.FloatField(default=60.0)
    samples = serializers.IntegerField(min_value=2, default=61)
    rtol = serializers.FloatField(default=1e-10)
    atol = serializers.FloatField(default=1e-12)
    nodes = serializers.IntegerField(min_value=10, default=NODES)

    def validate_s0(self, value):
        if not (0.0 < value < 1.0):
            raise serializers.ValidationError(f"s0 must lie in (0, 1), got {value}")
        return value

    def validate_t_end(self, value):
        return _positive("t_end", value)

    def validate_rtol(self, value):
        return _positive("rtol", value)

    def validate_atol(self, value):
        return _positive("atol", value)

    def validate(self, attrs):
        kind = attrs["model"].get("builtin")
        if kind not in BUILDERS:
            raise serializers.ValidationError({"model": f"exact solution not available for '{kind or 'custom model'}'"})
        return attrs


class VerifySerializer(serializers.Serializer):
    model = ModelConfigSerializer(required=False)
    interacting = InteractingSerializer(required=False)
    points = serializers.IntegerField(min_value=1, required=False)
    seed = serializers.IntegerField(min_value=0, required=False)
    tol = serializers.FloatField(required=False)

    def validate_tol(self, value):
        return _positive("tol", value)

    def validate(self, attrs):
        if ("model" in attrs) == ("interacting" in attrs):
            raise serializers.ValidationError("give exactly one of 'model' or 'interacting'")
        return attrs


class CoupleSerializer(InteractingSerializer, IntegrationSerializer):
    initial = serializers.ListField(child=serializers.ListField(child=serializers.FloatField()), allow_empty=False)
    audit_tol = serializers.FloatField(default=1e-9)

    def validate_audit_tol(self, value):
        return _positive("audit_tol", value)

    def validate(self, attrs):
        attrs = super().validate(attrs)
        system = attrs["system"]
        if len(attrs["initial"]) != system.size:
            raise serializers.ValidationError({"initial": f"expected {system.size} populations, got {len(attrs['initial'])}"})
        k = system.compartments_per_population
        for a, block in enumerate(attrs["initial"]):
            if len(block) != k:
                raise serializers.ValidationError({"initial": f"population {a + 1} needs {k} values, got {len(block)}"})
        return attrs


class SweepSerializer(SimulateSerializer):
    grid = serializers.DictField(child=serializers.ListField(child=serializers.FloatField()))

    def validate(self, attrs):
        attrs = super().validate(attrs)
        model = attrs["model"]["model"]
        grid = attrs["grid"]
        if not grid or any(not values for values in grid.values()):
            raise serializers.ValidationError({"grid": "grid is empty"})
        unknown = sorted(set(grid) - set(model.parameters))
        if unknown:
            raise serializers.ValidationError({"grid": f"'{unknown[0]}' is not a parameter of the model"})
        missing = [c for c in ("S", "I") if c not in model.compartments]
        if missing:
            raise serializers.ValidationError({"model": f"sweep statistics need compartment '{missing[0]}'"})
        return attrs
