"""
Run-config schemas.

A run config is one JSON document; every section has its own schema and
unknown keys are rejected at every level.
"""

from typing import Dict, List

from marshmallow import (
    RAISE,
    Schema,
    ValidationError,
    fields,
    validate,
    validates_schema,
)

COMMANDS = ("smat", "eig-beta", "eig-omega", "band", "tdcheck", "optimize", "spectrum", "field")

# Sections each command cannot run without
REQUIRED_SECTIONS: Dict[str, List[str]] = {
    "smat": ["geometry", "media", "omega"],
    "eig-beta": ["geometry", "media", "lattice", "omega", "contour"],
    "eig-omega": ["geometry", "media", "lattice", "beta", "contour"],
    "band": ["geometry", "media", "lattice", "sweep"],
    "tdcheck": ["geometry", "media", "lattice", "omega", "contour", "sensitivity"],
    "optimize": ["media", "lattice", "optimization"],
    "spectrum": ["geometry", "media", "spectrum"],
    "field": ["geometry", "media", "lattice", "omega", "contour", "field"],
}


class Complex(fields.Field):
    """A complex number written as a JSON number or a [re, im] pair."""

    default_error_messages = {"invalid": "Expected a number or a [re, im] pair."}

    def _serialize(self, value, attr, obj, **kwargs):
        if value is None:
            return None
        value = complex(value)
        return [value.real, value.imag]

    def _deserialize(self, value, attr, data, **kwargs):
        if isinstance(value, bool):
            raise self.make_error("invalid")
        if isinstance(value, (int, float)):
            return complex(value)
        if isinstance(value, (list, tuple)) and len(value) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            return complex(value[0], value[1])
        raise self.make_error("invalid")


def _point(**kwargs):
    return fields.List(fields.Float(), validate=validate.Length(equal=2), **kwargs)


class StrictSchema(Schema):
    class Meta:
        unknown = RAISE
        ordered = True


class GeometrySchema(StrictSchema):
    kind = fields.String(required=True, validate=validate.OneOf(["circle", "polyline", "levelset"]))
    radius = fields.Float(validate=validate.Range(min=0, min_inclusive=False))
    center = _point()
    path = fields.String()
    solver = fields.String(load_default="bem", validate=validate.OneOf(["bem", "analytic"]))
    n_elements = fields.Integer(load_default=800, validate=validate.Range(min=8))
    cells = fields.Integer(load_default=128, validate=validate.Range(min=8))

    @validates_schema
    def check_kind(self, data, **kwargs):
        kind = data["kind"]
        if kind == "circle" and "radius" not in data:
            raise ValidationError("A circle geometry needs a radius.", "radius")
        if kind in ("polyline", "levelset") and "path" not in data:
            raise ValidationError(f"A {kind} geometry needs a path.", "path")
        if data.get("solver") == "analytic" and kind != "circle":
            raise ValidationError("The analytic solver only handles circles.", "solver")


class MediaSchema(StrictSchema):
    rho = fields.Float(load_default=1.0, validate=validate.Range(min=0, min_inclusive=False))
    kappa = fields.Float(load_default=1.0, validate=validate.Range(min=0, min_inclusive=False))
    rho_hat = fields.Float(required=True, validate=validate.Range(min=0, min_inclusive=False))
    kappa_hat = fields.Float(required=True, validate=validate.Range(min=0, min_inclusive=False))


class LatticeSchema(StrictSchema):
    L = fields.Float(required=True, validate=validate.Range(min=0, min_inclusive=False))
    n_tr = fields.Integer(validate=validate.Range(min=0, max=100))
    s = fields.Integer(validate=validate.Range(min=2))
    x0 = _point()
    dump_integrand = fields.Boolean(load_default=False)


class ContourSchema(StrictSchema):
    center = Complex(required=True)
    radius = fields.Float(required=True, validate=validate.Range(min=0, min_inclusive=False))
    quad_points = fields.Integer(validate=validate.Range(min=8))
    moments = fields.Integer(validate=validate.Range(min=1))
    probes = fields.Integer(validate=validate.Range(min=1))
    rank_tol = fields.Float(validate=validate.Range(min=0, max=1, min_inclusive=False,
                                                    max_inclusive=False))
    seed = fields.Integer(validate=validate.Range(min=0))
    residual_tol = fields.Float(validate=validate.Range(min=0, min_inclusive=False))


class SweepSchema(StrictSchema):
    omega_min = fields.Float(required=True, validate=validate.Range(min=0, min_inclusive=False))
    omega_max = fields.Float(required=True, validate=validate.Range(min=0, min_inclusive=False))
    points = fields.Integer(required=True, validate=validate.Range(min=1))
    radius = fields.Float(validate=validate.Range(min=0, min_inclusive=False))
    im_max = fields.Float(validate=validate.Range(min=0))
    tol_im = fields.Float(validate=validate.Range(min=0, min_inclusive=False))

    @validates_schema
    def check_range(self, data, **kwargs):
        if data["omega_max"] < data["omega_min"]:
            raise ValidationError("omega_max must not be below omega_min.", "omega_max")


class SensitivitySchema(StrictSchema):
    x = _point()
    eps = fields.List(fields.Float(validate=validate.Range(min=0, min_inclusive=False)),
                      load_default=list)
    samples = fields.Integer(load_default=0, validate=validate.Range(min=0))

    @validates_schema
    def check_points(self, data, **kwargs):
        if data.get("eps") and "x" not in data:
            raise ValidationError("A finite-difference check needs the point x.", "x")


class OptimizationSchema(StrictSchema):
    omega = fields.Float(required=True, validate=validate.Range(min=0, min_inclusive=False))
    beta_seed = Complex(required=True)
    init_radius = fields.Float(load_default=0.3, validate=validate.Range(min=0, min_inclusive=False))
    init_path = fields.String()
    delta = fields.Float(validate=validate.Range(min=0, min_inclusive=False))
    delta_min = fields.Float(validate=validate.Range(min=0, min_inclusive=False))
    delta_max = fields.Float(validate=validate.Range(min=0, min_inclusive=False))
    j_tol = fields.Float(validate=validate.Range(min=0))
    max_iter = fields.Integer(validate=validate.Range(min=0))
    n_elements = fields.Integer(validate=validate.Range(min=8))
    verify_elements = fields.Integer(validate=validate.Range(min=0))
    grid = fields.Integer(validate=validate.Range(min=4))
    cells = fields.Integer(validate=validate.Range(min=8))
    samples = fields.Integer(validate=validate.Range(min=2))
    seed_radius = fields.Float(validate=validate.Range(min=0, min_inclusive=False))
    snapshot_every = fields.Integer(validate=validate.Range(min=0))


class LineSchema(StrictSchema):
    start = _point(required=True)
    end = _point(required=True)


class SpectrumSchema(StrictSchema):
    omega_min = fields.Float(required=True, validate=validate.Range(min=0, min_inclusive=False))
    omega_max = fields.Float(required=True, validate=validate.Range(min=0, min_inclusive=False))
    points = fields.Integer(required=True, validate=validate.Range(min=1))
    count = fields.Integer(validate=validate.Range(min=0))
    spacing = fields.Float(load_default=1.0, validate=validate.Range(min=0, min_inclusive=False))
    centers = fields.List(_point())
    direction = _point()
    source = _point()
    gamma_in = fields.Nested(LineSchema, required=True)
    gamma_out = fields.Nested(LineSchema, required=True)
    quad_n = fields.Integer(load_default=32, validate=validate.Range(min=2))

    @validates_schema
    def check_centers(self, data, **kwargs):
        if "count" not in data and "centers" not in data:
            raise ValidationError("Give either count or centers.", "centers")
        if "count" in data and "centers" in data:
            raise ValidationError("count and centers are mutually exclusive.", "centers")
        if "direction" in data and "source" in data:
            raise ValidationError("Give a plane-wave direction or a source point, not both.", "source")


class GridSchema(StrictSchema):
    x_min = fields.Float(required=True)
    x_max = fields.Float(required=True)
    y_min = fields.Float(required=True)
    y_max = fields.Float(required=True)
    nx = fields.Integer(required=True, validate=validate.Range(min=1))
    ny = fields.Integer(required=True, validate=validate.Range(min=1))


class FieldSchema(StrictSchema):
    grid = fields.Nested(GridSchema, required=True)
    copies = fields.Integer(load_default=30, validate=validate.Range(min=1))
    modes = fields.Integer(load_default=1, validate=validate.Range(min=1))


class ConvergenceSchema(StrictSchema):
    element_counts = fields.List(fields.Integer(validate=validate.Range(min=8)), load_default=list)
    n_tr_list = fields.List(fields.Integer(validate=validate.Range(min=0)), load_default=list)


class RunConfigSchema(StrictSchema):
    command = fields.String(validate=validate.OneOf(COMMANDS))
    description = fields.String()
    geometry = fields.Nested(GeometrySchema)
    media = fields.Nested(MediaSchema)
    lattice = fields.Nested(LatticeSchema)
    omega = Complex()
    beta = Complex()
    contour = fields.Nested(ContourSchema)
    sweep = fields.Nested(SweepSchema)
    sensitivity = fields.Nested(SensitivitySchema)
    optimization = fields.Nested(OptimizationSchema)
    spectrum = fields.Nested(SpectrumSchema)
    field = fields.Nested(FieldSchema)
    convergence = fields.Nested(ConvergenceSchema)
    workers = fields.Integer(validate=validate.Range(min=1))

    @validates_schema
    def check_sections(self, data, **kwargs):
        command = data.get("command")
        if command is None:
            return
        missing = [name for name in REQUIRED_SECTIONS[command] if name not in data]
        if missing:
            raise ValidationError(
                {name: [f"Required by the '{command}' command."] for name in missing}
            )
