"""
Scenario presets for the three benchmark problems.

Each preset is a flat mapping of scenario keys, layered over the settings
defaults and under scenario files and command-line flags. Resolutions are
scaled down from the published runs; every physical parameter is the
published value.
"""

SCENARIOS = ('activated_disc', 'stretched_disc', 'oscillating_ball', 'custom')

# Disc released in a rotating flow given by a stream function
ACTIVATED_DISC = {
    'physical.rho_f': 1.0,
    'physical.mu_f': 0.01,
    'physical.rho_s': 1.5,
    'physical.c1': 1.0,
    'grid.extents': [0.0, 1.0, 0.0, 1.0],
    'grid.nx': 16,
    'bc.mode': 'periodic',
    'solid.shape': 'disc',
    'solid.center': [0.5, 0.5],
    'solid.radius': 0.2,
    'solid.target_h': 0.0225,
    'solid.stretch': 1.0,
    'initial.kind': 'stream_function',
    'initial.psi0': 0.05,
    'time.dt': 1e-2,
    'time.n_steps': 50,
}

# Quarter disc stretched into an ellipse of the same area and released at rest
STRETCHED_DISC = {
    'physical.rho_f': 1.0,
    'physical.mu_f': 0.01,
    'physical.rho_s': 2.0,
    'physical.c1': 2.0,
    'grid.extents': [0.0, 1.0, 0.0, 1.0],
    'grid.nx': 22,
    'bc.mode': 'noslip',
    'bc.x-': 'symmetry',
    'bc.y-': 'symmetry',
    'solid.shape': 'quarter_disc',
    'solid.center': [0.0, 0.0],
    'solid.radius': 0.4,
    'solid.target_h': 0.025,
    'solid.stretch': 1.4,
    'initial.kind': 'stretched',
    'time.dt': 5e-3,
    'time.n_steps': 100,
}

# One eighth of the 3D ball in [0,1]x[0,1]x[0,0.6], cut along its symmetry planes
OSCILLATING_BALL = {
    'physical.rho_f': 1.0,
    'physical.mu_f': 0.01,
    'physical.rho_s': 1.5,
    'physical.c1': 1.0,
    'grid.extents': [0.0, 0.5, 0.0, 0.5, 0.0, 0.3],
    'grid.nx': 8,
    'grid.nz': 5,
    'bc.mode': 'symmetry',
    'solid.shape': 'ball_octant',
    'solid.center': [0.5, 0.5, 0.3],
    'solid.radius': 0.2,
    'solid.target_h': 0.04,
    'solid.octant_signs': [-1, -1, -1],
    'solid.stretch': 1.0,
    'initial.kind': 'stream_function',
    'initial.psi0': 0.05,
    'time.dt': 1e-2,
    'time.n_steps': 20,
}

PRESETS = {
    'activated_disc': ACTIVATED_DISC,
    'stretched_disc': STRETCHED_DISC,
    'oscillating_ball': OSCILLATING_BALL,
    'custom': {},
}


def preset_values(scenario):
    """Copy of a preset's key/value mapping"""
    return dict(PRESETS[scenario])
