import uuid
import os


'''THETA EVALUATION'''
TRUNC_EPS = 1e-17
TRUNC_GUARD = 4
ZERO_GUARD = 1e-13
# genericity screen: reject q with |q^k - p^m| < zero_guard for these ranges
SCREEN_K_MAX = 12
SCREEN_M_RANGE = 3
# partial products are rescaled when their magnitude leaves this window
SCALE_LOW = 1e-150
SCALE_HIGH = 1e150

'''SAMPLER DEFAULTS'''
DEFAULT_SEED = 20240601
DEFAULT_P_MAX = 0.5
DEFAULT_MODULUS_RANGE = (0.5, 1.5)
DEFAULT_MAX_RESAMPLES = 100
RNG_ALGORITHM = "numpy.random.PCG64 via SeedSequence.spawn"

'''TOLERANCES'''
THETA_IDENTITY_TOL = 1e-11
GUSTAFSON_TOL = 1e-10
DELTA_TOL = 1e-8
LINK_TOL = 1e-9
LEMMA_TOL = 1e-9
IDENTITY_TOL = 1e-8
IDENTITY_TOL_P_ZERO = 1e-10
PAIR_TOL = 1e-8
QUARTIC_FORMS_TOL = 1e-10
SIMPLEX_TOL = 1e-9
CONSTRAINT_TOL = 1e-13
MAX_DEGENERATE_RATE = 0.2

'''REPORTS'''
REPORT_SCHEMA_VERSION = "1.0"
SIGNIFICANT_DIGITS = 17
THREADS_ENV_VAR = "EHS_THREADS"
# trials are handed to each worker process in about this many chunks
JOB_CHUNKS_PER_WORKER = 8

EXIT_OK = 0
EXIT_FAILURES = 1
EXIT_USAGE = 2

RUN_ID = str(uuid.uuid4())
'''LOG FILE PATHS'''
LOGS_DIR_PATH = os.path.join('..', 'logs', 'Elliptic_Verification')
RUN_LOGS_DIR_PATH = os.path.join(LOGS_DIR_PATH, RUN_ID)
LOG_FILE_PATH = os.path.join(RUN_LOGS_DIR_PATH, 'log_file.log')
OUTPUT_DUMP = os.path.join(RUN_LOGS_DIR_PATH, 'output_dump.json')
