"""
Command decorators
"""
import logging
import sys
from functools import wraps

from utils.validation import ValidationError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def handle_errors(f):
    """Map command exceptions onto exit codes with a one-line diagnostic"""
    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            result = f(*args, **kwargs)
            return EXIT_OK if result is None else result
        except ValidationError as e:
            logger.warning(f"Validation error in {f.__name__}: {e}")
            print(f"error: {e}", file=sys.stderr)
            return EXIT_USAGE
        except FileNotFoundError as e:
            logger.warning(f"Missing file in {f.__name__}: {e}")
            print(f"error: {e}", file=sys.stderr)
            return EXIT_USAGE
        except Exception as e:
            logger.error(
                f"Unexpected error in {f.__name__}: {e}",
                exc_info=True
            )
            print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
            return EXIT_FAILURE

    return decorated_function
