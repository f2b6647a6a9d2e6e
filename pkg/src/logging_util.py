import functools
import time
import contextvars
from contextlib import contextmanager

from src.errors import BLError
from src.logger import setup_logger

logger = setup_logger(__name__)

operations_called = contextvars.ContextVar("operations_called", default=None)
tree_path = contextvars.ContextVar("tree_path", default=())


def log_operation(operation_name):
    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            # Initialize the list if not already set
            op_list = operations_called.get()
            if op_list is None:
                op_list = []
                operations_called.set(op_list)
            op_list.append(operation_name)
            start = time.perf_counter()
            logger.debug(f"[OP] '{operation_name}' started at {current_path() or 'root'}")
            try:
                result = func(*args, **kwargs)
                logger.debug(
                    f"[OP] '{operation_name}' completed in {time.perf_counter()-start:.3f}s"
                )
                return result
            except BLError as e:
                if e.path is None and tree_path.get():
                    e.path = current_path()
                logger.debug(f"[OP] '{operation_name}' failed: {e}")
                raise
            except Exception as e:
                logger.error(f"[OP] '{operation_name}' failed: {e}")
                raise

        return wrapper

    return decorator


@contextmanager
def descend(label: str):
    """Push one segment onto the splitting-tree path for the duration of the block."""
    token = tree_path.set(tree_path.get() + (label,))
    try:
        yield
    except BLError as e:
        if e.path is None:
            e.path = current_path()
        raise
    finally:
        tree_path.reset(token)


def current_path() -> str:
    return "/".join(tree_path.get())


def get_operations_called():
    """Returns the list of operations called in the current context, or an empty list."""
    op_list = operations_called.get()
    return op_list if op_list is not None else []


def reset_operations_called():
    """Resets the operations_called context variable."""
    operations_called.set([])
