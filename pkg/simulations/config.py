"""
Scenario configuration.

Values are resolved in layers: the FSI_* settings defaults, then the scenario
preset, then a scenario file of `section.key=value` lines, then command-line
overrides. Files are read through python-decouple, so casting follows its
rules (`true/false/on/off` booleans, comma-separated lists).
"""

from dataclasses import asdict, dataclass, field, replace
import logging
import math
from pathlib import Path

from decouple import Config, Csv, RepositoryEmpty, RepositoryEnv, UndefinedValueError
from django.conf import settings
from django.core.exceptions import ValidationError

from assembly.fluid import CONVECTION_FORMS
from assembly.params import PhysicalParams
from assembly.solid import J_TERM_MODES
from assembly.system import PRESSURE_SPACES
from meshing.grids import AXES, BOUNDARY_TAGS, build_fluid_grid, face_names
from meshing.mesh_io import read_solid_mesh
from meshing.solids import SOLID_DIMS, SOLID_SHAPES, apply_stretch, build_solid_mesh
from timestepper.state import INITIAL_KINDS, InitialCondition, StepOptions
from .presets import SCENARIOS, preset_values

logger = logging.getLogger(__name__)

SCHEMES = ('implicit', 'explicit')
BC_MODES = ('periodic', 'noslip', 'wall', 'symmetry')

_floats = Csv(cast=float)
_ints = Csv(cast=int)

KEY_CASTS = {
    'scenario': str,
    'physical.rho_f': float,
    'physical.mu_f': float,
    'physical.rho_s': float,
    'physical.c1': float,
    'grid.extents': _floats,
    'grid.nx': int,
    'grid.ny': int,
    'grid.nz': int,
    'grid.boundary_eps': float,
    'solid.shape': str,
    'solid.center': _floats,
    'solid.radius': float,
    'solid.target_h': float,
    'solid.stretch': float,
    'solid.octant_signs': _ints,
    'solid.mesh_file': str,
    'initial.kind': str,
    'initial.psi0': float,
    'time.dt': float,
    'time.n_steps': int,
    'solver.scheme': str,
    'solver.pressure_space': str,
    'solver.convection': str,
    'solver.j_term': str,
    'solver.fp_tol': float,
    'solver.fp_max': int,
    'solver.tol': float,
    'solver.lenient': bool,
    'bc.mode': str,
    **{f'bc.{axis}{side}': str for axis in AXES for side in '-+'},
    'output.dir': str,
    'output.field_stride': int,
    'output.record': bool,
}


class _MappingRepository(RepositoryEmpty):
    """decouple repository over an in-memory mapping of raw values"""

    def __init__(self, data):
        self.data = dict(data)

    def __contains__(self, key):
        return key in self.data

    def __getitem__(self, key):
        return self.data[key]


def settings_defaults():
    """Base layer taken from the FSI_* settings"""
    return {
        'scenario': 'custom',
        'physical.rho_f': 1.0,
        'physical.mu_f': 0.01,
        'physical.rho_s': 1.5,
        'physical.c1': 1.0,
        'grid.extents': [0.0, 1.0, 0.0, 1.0],
        'grid.nx': 16,
        'grid.boundary_eps': settings.FSI_BOUNDARY_EPS,
        'bc.mode': 'noslip',
        'solid.shape': 'disc',
        'solid.center': [0.5, 0.5],
        'solid.radius': 0.2,
        'solid.target_h': 0.0225,
        'solid.stretch': 1.0,
        'solid.octant_signs': [1, 1, 1],
        'solid.mesh_file': '',
        'initial.kind': 'zero',
        'initial.psi0': 0.05,
        'time.dt': 1e-2,
        'time.n_steps': 50,
        'solver.scheme': 'implicit',
        'solver.pressure_space': 'p1',
        'solver.convection': settings.FSI_CONVECTION,
        'solver.j_term': settings.FSI_J_TERM,
        'solver.fp_tol': settings.FSI_FP_TOL,
        'solver.fp_max': settings.FSI_FP_MAX,
        'solver.tol': settings.FSI_SOLVER_TOL,
        'solver.lenient': False,
        'output.dir': settings.FSI_OUTPUT_DIR,
        'output.field_stride': 0,
        'output.record': True,
    }


def _cast_layer(config, keys, source):
    """Cast every key of a decouple Config, rejecting unknown keys"""
    unknown = sorted(k for k in keys if k not in KEY_CASTS)
    if unknown:
        raise ValidationError(
            {key: f"Unknown configuration key in {source}" for key in unknown}
        )
    values = {}
    errors = {}
    for key in keys:
        try:
            values[key] = config.get(key, cast=KEY_CASTS[key])
        except (ValueError, UndefinedValueError) as exc:
            errors[key] = f"Invalid value in {source}: {exc}"
    if errors:
        raise ValidationError(errors)
    return values


def read_config_file(path):
    """Raw key/value layer of a scenario file"""
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"Scenario file not found: {path}")
    repository = RepositoryEnv(str(path))
    return _cast_layer(Config(repository), list(repository.data), str(path))


def cast_overrides(overrides):
    """Cast string overrides the way file values are cast; typed values pass through"""
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    raw = {k: v for k, v in overrides.items() if isinstance(v, str)}
    typed = {k: v for k, v in overrides.items() if not isinstance(v, str)}
    unknown = sorted(k for k in typed if k not in KEY_CASTS)
    if unknown:
        raise ValidationError({key: "Unknown configuration key" for key in unknown})
    values = _cast_layer(Config(_MappingRepository(raw)), list(raw), 'overrides')
    values.update(typed)
    return values


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to set up and run one scenario"""
    scenario: str
    physical: PhysicalParams
    extents: tuple
    cells_per_axis: tuple
    boundary: dict
    solid_shape: str
    solid_center: tuple
    solid_radius: float
    target_h: float
    initial: InitialCondition
    dt: float
    n_steps: int
    scheme: str = 'implicit'
    options: StepOptions = field(default_factory=StepOptions)
    stretch: float = 1.0
    octant_signs: tuple = (1, 1, 1)
    mesh_file: str = ''
    boundary_eps: float = 1e-12
    output_dir: str = 'output'
    field_stride: int = 0
    record: bool = True

    def __str__(self):
        cells = 'x'.join(str(n) for n in self.cells_per_axis)
        return (f"{self.scenario} {cells} dt={self.dt:g} steps={self.n_steps} "
                f"{self.scheme}/{self.options.pressure_space}")

    @property
    def dim(self):
        return len(self.cells_per_axis)

    @property
    def t_final(self):
        return self.dt * self.n_steps

    def build_grid(self):
        return build_fluid_grid(self.extents, self.cells_per_axis, self.boundary,
                                self.boundary_eps)

    def build_solid(self):
        if self.mesh_file:
            mesh = read_solid_mesh(self.mesh_file)
        else:
            mesh = build_solid_mesh(self.solid_shape, self.solid_center, self.solid_radius,
                                    self.target_h, self.octant_signs)
        if self.stretch != 1.0:
            mesh = apply_stretch(mesh, self.stretch)
        return mesh

    def with_time_step(self, dt, n_steps, **changes):
        return replace(self, dt=dt, n_steps=n_steps, **changes)

    def as_dict(self):
        """JSON-serialisable copy for run records"""
        data = asdict(self)
        data['boundary'] = dict(self.boundary)
        return data


def _boundary_tags(values, dim, errors):
    mode = values['bc.mode']
    if mode not in BC_MODES:
        errors['bc.mode'] = f"Unknown boundary mode '{mode}'"
        return {}
    default = 'wall' if mode == 'noslip' else mode
    tags = {}
    for face in face_names(dim):
        tag = values.get(f'bc.{face}', default)
        if tag == 'noslip':
            tag = 'wall'
        if tag not in BOUNDARY_TAGS:
            errors[f'bc.{face}'] = f"Unknown boundary tag '{tag}'"
        tags[face] = tag
    return tags


def build_config(values):
    """Validate a fully layered key/value mapping into a ScenarioConfig"""
    errors = {}

    def choice(key, allowed):
        if values[key] not in allowed:
            errors[key] = f"'{values[key]}' is not one of {', '.join(allowed)}"
        return values[key]

    scenario = choice('scenario', SCENARIOS)
    extents = list(values['grid.extents'])
    dim = len(extents) // 2
    if len(extents) not in (4, 6):
        errors['grid.extents'] = "Give lower,upper pairs for 2 or 3 axes"
        dim = 2
    nx = values['grid.nx']
    cells = tuple(values.get(f'grid.n{axis}') or nx for axis in AXES[:dim])
    if any(n < 2 for n in cells):
        errors['grid.nx'] = f"Need at least 2 cells per axis, got {cells}"

    dt = values['time.dt']
    n_steps = values['time.n_steps']
    if not (dt > 0.0 and math.isfinite(dt)):
        errors['time.dt'] = f"Time step must be positive, got {dt}"
    if n_steps < 1:
        errors['time.n_steps'] = f"Need at least one step, got {n_steps}"

    scheme = choice('solver.scheme', SCHEMES)
    choice('solver.pressure_space', PRESSURE_SPACES)
    choice('solver.convection', CONVECTION_FORMS)
    choice('solver.j_term', J_TERM_MODES)
    shape = choice('solid.shape', SOLID_SHAPES)
    choice('initial.kind', INITIAL_KINDS)
    if not values['solid.mesh_file'] and shape in SOLID_DIMS and 'grid.extents' not in errors:
        if SOLID_DIMS[shape] != dim:
            errors['solid.shape'] = f"A {shape} solid does not fit a {dim}D grid"
        elif len(values['solid.center']) != dim:
            errors['solid.center'] = f"Give {dim} center coordinates for a {dim}D grid"
    if values['solver.fp_max'] < 1:
        errors['solver.fp_max'] = "Need at least one fixed-point iteration"
    if not values['solver.fp_tol'] > 0.0:
        errors['solver.fp_tol'] = "Fixed-point tolerance must be positive"
    if values['output.field_stride'] < 0:
        errors['output.field_stride'] = "Field stride must be non-negative"
    if values['solid.stretch'] <= 0.0:
        errors['solid.stretch'] = "Stretch factor must be positive"

    boundary = _boundary_tags(values, dim, errors)
    try:
        physical = PhysicalParams(values['physical.rho_f'], values['physical.mu_f'],
                                  values['physical.rho_s'], values['physical.c1'])
    except ValidationError as exc:
        errors.update({f'physical.{k}': v for k, v in exc.message_dict.items()})
    if errors:
        raise ValidationError(errors)

    options = StepOptions(
        pressure_space=values['solver.pressure_space'],
        convection=values['solver.convection'],
        j_term=values['solver.j_term'],
        fp_tol=values['solver.fp_tol'],
        fp_max=values['solver.fp_max'],
        solver_tol=values['solver.tol'],
        lenient=values['solver.lenient'],
    )
    initial = InitialCondition(
        kind=values['initial.kind'],
        psi0=values['initial.psi0'],
        stretch=values['solid.stretch'],
    )
    return ScenarioConfig(
        scenario=scenario,
        physical=physical,
        extents=tuple((extents[2 * a], extents[2 * a + 1]) for a in range(dim)),
        cells_per_axis=cells,
        boundary=boundary,
        solid_shape=values['solid.shape'],
        solid_center=tuple(values['solid.center']),
        solid_radius=values['solid.radius'],
        target_h=values['solid.target_h'],
        initial=initial,
        dt=dt,
        n_steps=n_steps,
        scheme=scheme,
        options=options,
        stretch=values['solid.stretch'],
        octant_signs=tuple(values['solid.octant_signs']),
        mesh_file=values['solid.mesh_file'],
        boundary_eps=values['grid.boundary_eps'],
        output_dir=str(values['output.dir']),
        field_stride=values['output.field_stride'],
        record=values['output.record'],
    )


def load_config(scenario=None, path=None, overrides=None):
    """Resolve settings defaults < preset < scenario file < overrides.

    The scenario named by the overrides wins over the file's, which wins over
    the `scenario` argument.
    """
    file_values = read_config_file(path) if path else {}
    override_values = cast_overrides(overrides)
    name = override_values.get('scenario') or file_values.get('scenario') or scenario or 'custom'
    if name not in SCENARIOS:
        raise ValidationError({'scenario': f"Unknown scenario '{name}'"})

    values = settings_defaults()
    values.update(preset_values(name))
    values.update(file_values)
    values.update(override_values)
    values['scenario'] = name
    config = build_config(values)
    logger.info("Resolved scenario %s", config)
    return config


CLI_KEYS = {
    'scenario': 'scenario',
    'nx': 'grid.nx',
    'ny': 'grid.ny',
    'nz': 'grid.nz',
    'dt': 'time.dt',
    'steps': 'time.n_steps',
    'scheme': 'solver.scheme',
    'pressure': 'solver.pressure_space',
    'out': 'output.dir',
    'stride': 'output.field_stride',
}


def cli_overrides(options):
    """Override layer from management command options; unset flags are skipped"""
    overrides = {key: options.get(name) for name, key in CLI_KEYS.items()}
    bc = options.get('bc')
    if bc:
        overrides['bc.mode'] = bc
        for face in face_names(3):
            overrides[f'bc.{face}'] = bc
    if options.get('lenient'):
        overrides['solver.lenient'] = True
    return {k: v for k, v in overrides.items() if v is not None}
