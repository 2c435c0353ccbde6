import os

class Config:
    BASE_DIR = os.path.dirname(os.path.abspath(__file__))
    INSTANCE_DIR = os.getenv('SPECLAB_INSTANCE_DIR', os.path.join(BASE_DIR, 'data', 'instances'))
    LOG_LEVEL = os.getenv('SPECLAB_LOG_LEVEL', 'INFO')

    # Root finder settings
    ROOT_TOL = 1e-12
    ROOT_CLUSTER_TOL = 1e-4
    ROOT_MAX_ITER = 500

    # Quadrature settings
    QUAD_TOL = 1e-12
    QUAD_ORDER = 20
    QUAD_MAX_DEPTH = 40
    QUAD_TOL_KERNEL = 1e-10

    # Jet settings
    JET_SAMPLES = 256
    JET_ORDER = 12
    JET_RADIUS_FACTOR = 0.2
    JET_TAIL_TOL = 1e-10
    SCHWARZ_SAMPLES = 64

    # Surface settings
    SAFETY_FACTOR = 0.25
    BASEPOINT_ANGLES = 64
    CUT_CYCLE_FACTOR = 0.25
    GAP_CYCLE_FACTOR = 0.15
    CONTINUATION_MIN_STEP = 1e-9
    GENERICITY_TOL = 1e-8

    # Theta settings
    THETA_RADIUS = 4.0
    THETA_LATTICE_CAP = 12
    THETA_MAX_GENUS = 4
    THETA_GRADIENT_FLOOR = 1e-6
    HALF_DENSITY_SAMPLES = 64
    PRIME_FORM_STEP = 1e-3

    # Linear algebra settings
    SOLVE_RESIDUAL_TOL = 1e-12
    SINGULAR_COND = 1e12

    # Moduli navigation settings
    FD_EPS = float(os.getenv('SPECLAB_FD_EPS', '1e-4'))
    NEWTON_TOL = 1e-12
    NEWTON_ACCEPT_TOL = 1e-10
    NEWTON_MAX_ITER = 25
    TRACKING_GUARD = 0.1

    # Gating tolerances (relative unless noted)
    TOL_SURFACE = 1e-10
    TOL_ELLIPTIC = 1e-9
    TOL_FORMS = 1e-9
    TOL_SYMMETRY = 1e-9
    TOL_DIRECTION = 1e-5
    TOL_ENDPOINT = 1e-5
    TOL_INVARIANCE = 1e-8
    TOL_DM_CUBIC = 1e-5
    TOL_EULER = 1e-8
    TOL_KERNEL = 1e-4
    TOL_TAU = 1e-4
    TOL_HESSIAN = 5e-4
    TOL_HESSIAN_SYMMETRY = 1e-8
    TOL_PREPOTENTIAL = 1e-5
    TOL_HIERARCHY = 1e-4
    TOL_IDENTITY = 1e-10
    TOL_ORACLE = 1e-8
    TOL_CROSS_DERIVATIVE = 1e-4
    TOL_JET_STABILITY = 1e-8
    TOL_CHART = 1e-11
    TOL_JACOBIAN = 1e-7
    TOL_TRANSPORT = 1e-2
    CONVERGENCE_RATIO = (3.5, 4.5)

    # Harness settings
    SUITES = ('surface', 'dm-cubic', 'kernels', 'prime-form', 'tau', 'hessian', 'hierarchy', 'scaling', 'all')
    SCALING_FACTOR = 1.3
    SAMPLE_POINTS = 5
    CHART_STEP = 1e-3
    TRANSPORT_STEPS = 10
    TRANSPORT_STEP = 1e-2
