# Marshmallow Schemas for plant files, Σ specs and compensator files
import re
from typing import Any, Dict, List, Optional, Sequence, Union

from marshmallow import EXCLUDE, Schema, ValidationError, fields, validate, validates_schema

from .cee import ObserverForm, SigmaParam
from .errors import SigmaError
from .ratfun import RatFun, RatMat, _coeffs_from_json


class BaseSchema(Schema):
    """Base schema with common fields and validation methods"""
    class Meta:
        ordered = True
        unknown = EXCLUDE


def _check_coeffs(values: Any, field_name: str, allow_empty: bool = False) -> None:
    if not isinstance(values, (list, tuple)):
        raise ValidationError("must be a list of coefficients", field_name)
    if not values and not allow_empty:
        raise ValidationError("coefficient list cannot be empty", field_name)
    try:
        _coeffs_from_json(values)
    except (TypeError, ValueError, KeyError) as err:
        raise ValidationError(f"malformed coefficient: {err}", field_name)


class RationalSchema(BaseSchema):
    """num/den coefficient lists, ascending in s"""

    num = fields.List(fields.Raw(), required=True)
    den = fields.List(fields.Raw(), load_default=lambda: [1.0])

    @validates_schema
    def validate_coefficients(self, data, **kwargs):
        """Validate coefficient entries and a nonzero denominator"""
        _check_coeffs(data.get("num"), "num", allow_empty=True)
        _check_coeffs(data.get("den"), "den")
        if not any(abs(c) > 0 for c in _coeffs_from_json(data["den"])):
            raise ValidationError("denominator is identically zero", "den")


class SisoPlantSchema(BaseSchema):
    """Coprime factors p = x / y"""

    x = fields.Nested(RationalSchema, required=True)
    y = fields.Nested(RationalSchema, required=True)


def _rational_grid():
    return fields.List(fields.List(fields.Nested(RationalSchema)), required=True)


class SigmaSpecSchema(BaseSchema):
    """Exactly one of roots, coeffs, Sigma or expression"""

    roots = fields.List(fields.Raw())
    coeffs = fields.List(fields.Raw())
    Sigma = fields.List(fields.List(fields.Float()))
    expression = fields.Str(validate=validate.Length(min=1))
    label = fields.Str(allow_none=True)

    @validates_schema
    def validate_single_source(self, data, **kwargs):
        """Validate that a Σ document names a single representation"""
        given = [k for k in ("roots", "coeffs", "Sigma", "expression") if k in data]
        if len(given) != 1:
            raise ValidationError("give exactly one of roots, coeffs, Sigma, expression", "_schema")
        for key in ("roots", "coeffs"):
            if key in data:
                _check_coeffs(data[key], key, allow_empty=(key == "roots"))
        if "Sigma" in data:
            widths = {len(row) for row in data["Sigma"]}
            if len(widths) > 1:
                raise ValidationError("Sigma rows must have equal length", "Sigma")


class SisoFileSchema(BaseSchema):
    """Plant file for a pair of SISO plants"""

    mode = fields.Str(required=True, validate=validate.OneOf(["siso"]))
    p0 = fields.Nested(SisoPlantSchema, required=True)
    p1 = fields.Nested(SisoPlantSchema, required=True)
    sigma = fields.Raw(allow_none=True)
    name = fields.Str(allow_none=True)


class MimoFileSchema(BaseSchema):
    """Plant file for a pair of MIMO plants P_i = N_i D_i⁻¹"""

    mode = fields.Str(required=True, validate=validate.OneOf(["mimo"]))
    N0 = _rational_grid()
    D0 = _rational_grid()
    N1 = _rational_grid()
    D1 = _rational_grid()
    sigma = fields.Raw(allow_none=True)
    name = fields.Str(allow_none=True)

    @validates_schema
    def validate_shapes(self, data, **kwargs):
        """Validate that all four factors are square of one size"""
        size = None
        for key in ("N0", "D0", "N1", "D1"):
            grid = data.get(key) or []
            rows = len(grid)
            if rows == 0 or any(len(row) != rows for row in grid):
                raise ValidationError("must be a nonempty square matrix", key)
            if size is None:
                size = rows
            elif rows != size:
                raise ValidationError(f"expected {size}x{size}, got {rows}x{rows}", key)


class CompensatorFileSchema(BaseSchema):
    """Compensator output as written by solve"""

    k = fields.Nested(RationalSchema)
    K = fields.List(fields.List(fields.Nested(RationalSchema)))
    x_c = fields.Nested(RationalSchema)
    y_c = fields.Nested(RationalSchema)
    N_c = fields.List(fields.List(fields.Nested(RationalSchema)))
    D_c = fields.List(fields.List(fields.Nested(RationalSchema)))
    sigma = fields.Dict()
    residuals = fields.Dict(keys=fields.Str(), values=fields.Float(allow_nan=True))

    @validates_schema
    def validate_kind(self, data, **kwargs):
        """Validate that exactly one of k, K is present"""
        if ("k" in data) == ("K" in data):
            raise ValidationError("give exactly one of k (scalar) or K (matrix)", "_schema")
        if ("N_c" in data) != ("D_c" in data):
            raise ValidationError("N_c and D_c must be given together", "N_c")


class JobConfigSchema(BaseSchema):
    """Batch job description for the CLI"""

    plants = fields.Str(allow_none=True)
    example = fields.Int(allow_none=True, validate=validate.Range(min=1, max=4))
    sigma = fields.Raw(allow_none=True)
    lambda_points = fields.Int(validate=validate.Range(min=1))
    lambda_grid = fields.List(fields.Float(validate=validate.Range(min=0.0, max=1.0)))
    tolerances = fields.Dict(keys=fields.Str(), values=fields.Float())
    output_dir = fields.Str(load_default="results")
    formats = fields.List(fields.Str(validate=validate.OneOf(["csv", "svg"])), load_default=lambda: ["csv", "svg"])
    verify = fields.Bool(load_default=True)

    @validates_schema
    def validate_source(self, data, **kwargs):
        """Validate that exactly one plant-pair source is given"""
        if (data.get("plants") is None) == (data.get("example") is None):
            raise ValidationError("give exactly one of plants or example", "plants")
        if "lambda_points" in data and "lambda_grid" in data:
            raise ValidationError("give lambda_points or lambda_grid, not both", "lambda_grid")


# ---------------------------------------------------------------------------
# conversions
# ---------------------------------------------------------------------------

def rational_from_dict(data: Dict[str, Any]) -> RatFun:
    return RatFun(_coeffs_from_json(data["num"]), _coeffs_from_json(data.get("den", [1.0])))


def ratmat_from_grid(grid: Sequence[Sequence[Dict[str, Any]]]) -> RatMat:
    return RatMat([[rational_from_dict(e) for e in row] for row in grid])


_FACTOR = re.compile(
    r"^\(?\s*z\s*(?:(?P<sign>[+-])\s*(?P<value>[0-9.eE+-]+))?\s*\)?\s*(?:(?:\^|\*\*)\s*(?P<power>\d+))?$"
)


def parse_sigma_expression(text: str) -> List[float]:
    """
    Roots of a product of linear factors in z, e.g. "z*(z-0.1)" or "(z-0.5)^2"

    Raises:
        SigmaError: the expression is not a product of factors z ± a
    """
    expr = text.replace(" ", "")
    if not expr:
        raise SigmaError("empty Σ expression")
    factors: List[str] = []
    depth, start = 0, 0
    for i, ch in enumerate(expr):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "*" and depth == 0:
            if expr[i:i + 2] == "**" or expr[i - 1:i + 1] == "**":
                continue
            factors.append(expr[start:i])
            start = i + 1
    factors.append(expr[start:])

    roots: List[float] = []
    for factor in factors:
        match = _FACTOR.match(factor)
        if not match:
            raise SigmaError(f"cannot read Σ factor '{factor}' (expected z, z-a or (z+a)^k)")
        value = float(match.group("value")) if match.group("value") else 0.0
        root = value if match.group("sign") == "-" else -value
        roots.extend([root] * int(match.group("power") or 1))
    return roots


def sigma_from_spec(spec: Union[str, Dict[str, Any], SigmaParam], obs: ObserverForm) -> SigmaParam:
    """
    Build a SigmaParam for the given observer form from a spec

    Raises:
        SigmaError: malformed spec, wrong size, or non-Schur Σ
    """
    if isinstance(spec, SigmaParam):
        return spec
    if isinstance(spec, str):
        spec = {"expression": spec}
    try:
        data = SigmaSpecSchema().load(spec)
    except ValidationError as err:
        raise SigmaError(f"invalid Σ spec: {err.messages}")
    label = data.get("label") or ""
    if "expression" in data:
        return SigmaParam.from_roots(parse_sigma_expression(data["expression"]), obs)
    if "roots" in data:
        return SigmaParam.from_roots(list(_coeffs_from_json(data["roots"])), obs)
    if "coeffs" in data:
        return SigmaParam.from_coeffs(_coeffs_from_json(data["coeffs"]), obs, label)
    return SigmaParam.from_matrix(data["Sigma"], obs, label)


def sigma_label(spec: Optional[Union[str, Dict[str, Any]]]) -> str:
    """Short printable form of a Σ spec"""
    if spec is None:
        return "central"
    if isinstance(spec, str):
        return spec
    if "label" in spec and spec["label"]:
        return str(spec["label"])
    for key in ("expression", "roots", "coeffs", "Sigma"):
        if key in spec:
            return f"{key}={spec[key]}"
    return str(spec)
