"""
Configuration module for the gazeguard simulator
"""
import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

BASE_DIR = os.path.dirname(os.path.abspath(__file__))


class Config:
    """Runtime configuration (environment driven)"""

    # Logging configuration
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
    LOG_FILE = os.getenv('LOG_FILE', '')

    # Experiment files
    DEFAULT_CONFIG_PATH = os.getenv(
        'GAZEGUARD_CONFIG',
        os.path.join(BASE_DIR, 'fixtures', 'default_experiment.yaml')
    )
    OUTPUT_DIR = os.getenv('GAZEGUARD_OUTPUT_DIR', 'output')

    # Process pool size for repeated evaluations
    WORKERS = int(os.getenv('GAZEGUARD_WORKERS', 1))


class SimulationDefaults:
    """Numerical defaults for the simulation and tuning stack"""

    # Gaze model
    N_AOIS = 13
    CONTENT_AOI = 5  # Main content AoI index (1-based)
    INITIAL_STATE = 's1'  # Readers start at the title
    BURR_RHO1 = 11.7  # Scale, seconds
    BURR_RHO2 = 62.5
    BURR_RHO3 = 0.04
    ROW_SUM_TOLERANCE = 1e-12

    # Highlight effect on the no-aid dynamics
    DISTRACTION_DAMPING = 0.5
    CONTENT_SOJOURN_SCALE = 0.6

    # Attention metrics
    SAMPLE_RATE_HZ = 60
    PERIOD_S = 3.0  # Generation stage length T_pl
    ATTENTION_THRESHOLD = 5.56
    UNIFORM_V_MIN = -30.0
    UNIFORM_V_MAX = 60.0
    UNIFORM_LEVELS = 4
    OFF_AOI_DECAY = 1.0  # Decay for ua/da (irrelevant while their score is 0)
    PUPIL_SCALE = 1.0

    # Score fitting (simulated annealing)
    SA_INITIAL_TEMPERATURE = 10.0
    SA_COOLING_RATE = 0.995
    SA_ITERATIONS = 10_000
    SA_PROPOSAL_SCALE = 0.02  # Fraction of the bound width
    SCORE_BOUNDS = (0.0, 50.0)
    DECAY_BOUNDS = (0.01, 20.0)

    # Q-learning
    BETA = 0.9
    ETA0 = 10.0
    EPSILON_KAPPA = 50.0
    EPSILON_DECAY = 0.99

    # Judgment oracle
    JUDGMENT_B1 = 0.15
    JUDGMENT_B2 = 2.0
    JUDGMENT_B3 = 1.0
    BASELINE_ACCURACY = 0.746
    CALIBRATION_TOLERANCE = 0.005
    CALIBRATION_SESSIONS = 20_000
    CALIBRATION_BRACKET = (-10.0, 10.0)
    CALIBRATION_MAX_WIDENINGS = 8

    # Bayesian optimization
    INITIAL_JITTER = 1e-10
    MAX_JITTER = 1e-6
    INITIAL_DESIGN = 10  # L0
    TUNING_STAGES = 60  # L
    MLE_RESTARTS = 5
    ACQUISITION_STARTS = 10
    ACQUISITION_STEPS = 50
    SURFACE_GRID = 25

    # Experiment
    EMAILS_PER_TUNING_STAGE = 100  # N_bo
    REPEATS = 20  # n_rp
    EMAILS_PER_USER = 12
    RANDOM_SEED = 42
