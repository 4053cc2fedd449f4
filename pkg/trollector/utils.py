"""Various utility functions for this project."""
# pylint: disable=W0212,W0621
import os
import re
import copy
import types
import uuid
import logging
import importlib
import concurrent.futures
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor

import jsonschema


_PLAIN_FORMAT = "%(asctime)s %(message)s"
_VERBOSE_FORMAT = "%(asctime)s [%(levelname)s] %(message)s  [at %(filename)s:%(lineno)d]"

# name -> (logging level, message layout)
_LEVELS = {
    "debug": (logging.DEBUG, _VERBOSE_FORMAT),
    "info": (logging.INFO, "%(asctime)s %(message)s  [at %(filename)s:%(lineno)d]"),
    "warn": (logging.INFO, _PLAIN_FORMAT),
    "warning": (logging.WARNING, _PLAIN_FORMAT),
    "error": (logging.ERROR, _VERBOSE_FORMAT),
    "critical": (logging.CRITICAL, _VERBOSE_FORMAT),
}


def get_logger(name=None, level="warn"):
    """Get the logger for printing informations.

    Every module keeps one named logger for stage transitions, solver outcomes
    and perception fallbacks. The environment variable ``LOG_LEVEL`` overrides
    the level given here.

    Parameters
    ----------
    name: str
        Name of the logger. A random one is generated when omitted.
    level: {'debug', 'info', 'warn', 'warning', 'error', 'critical'}
        Level of the logger. 'warn' is not an alias of 'warning': it logs at
        INFO level with the short message layout, while 'warning' is the true
        WARNING level.
    """
    logger = logging.getLogger(str(uuid.uuid4())[:8] if name is None else name)
    log_level, msg_format = _LEVELS[os.environ.get("LOG_LEVEL", level).lower()]

    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(fmt=msg_format, datefmt="%Y-%m-%d %H:%M:%S"))
    logger.handlers = [hdl for hdl in logger.handlers if not isinstance(hdl, logging.StreamHandler)]
    logger.addHandler(handler)
    logger.setLevel(log_level)
    return logger


logger = get_logger("Trollector Utils")


def camel_to_snake(string):
    """Convert a camel case to snake case"""
    return re.sub(r"(?<!^)(?=[A-Z])", "_", string).lower().replace("__", "_")


def snake_to_camel(string):
    """Convert a snake case to camel case"""
    return "".join(word.title() for word in string.split("_"))


def _path_keys(path):
    path = path[2:] if path.startswith("./") else path
    return [snake_to_camel(key) for key in path.split("/") if key]


def json_serializable(key_path="./", value_path="./"):
    """Class decorator mapping the ``__init__`` attributes onto a json object.

    Attribute ``max_jump_m`` maps to key ``MaxJumpM``. Attributes that are
    json-serializable themselves are converted recursively. The decorated class
    gains ``from_json`` and ``to_json``, plus a ``schema`` attribute: when set,
    ``from_json`` validates its input with jsonschema first.

    Parameters
    ----------
    key_path: Path
        Where the attributes live inside the json object. With
        ``key_path="./Settings"`` the attributes are read from ``d["Settings"]``.
    value_path: Path
        Path from each attribute key to its value. Settings files keep every
        value under ``Value`` next to its ``Description``, hence
        ``value_path="./Value"``.

    Examples
    --------
    .. code-block:: python

        >>> @json_serializable(key_path="./Settings", value_path="./Value")
            class Gate:
                def __init__(self):
                    self.alpha = 0.3
                    self.max_jump_m = 0.5

        >>> Gate().to_json()
        {"Settings": {"Alpha": {"Value": 0.3}, "MaxJumpM": {"Value": 0.5}}}

    Notes
    -----
    Class attributes are not serialized, only those assigned in ``__init__``.
    """
    ignored = ("key_path", "value_path", "schema")

    def _fields(self):
        skip = ignored + tuple(getattr(self, "transient", ()))
        return [(key, value) for key, value in self.__dict__.items() if key not in skip]

    def from_json(self, json_obj):
        if self.schema is not None:
            jsonschema.validate(instance=json_obj, schema=self.schema)

        section = json_obj
        for key in _path_keys(self.key_path):
            section = section[key]

        for attr, current in _fields(self):
            camel_key = snake_to_camel(attr)
            if hasattr(current, "from_json"):
                current.from_json(section[camel_key])
                continue
            if camel_key not in section:
                raise AttributeError(f"Attribute '{camel_key}' is missing in the configuration of {type(self)}")
            value = section[camel_key]
            for v_key in _path_keys(self.value_path):
                value = value[v_key]
            setattr(self, attr, value)
        return self

    def to_json(self):
        json_obj = {}
        section = json_obj
        for key in _path_keys(self.key_path):
            section = section.setdefault(key, {})

        v_keys = _path_keys(self.value_path)
        for attr, value in _fields(self):
            camel_key = snake_to_camel(attr)
            if hasattr(value, "to_json"):
                section[camel_key] = value.to_json()
            elif v_keys:
                leaf = section.setdefault(camel_key, {})
                for v_key in v_keys[:-1]:
                    leaf = leaf.setdefault(v_key, {})
                leaf[v_keys[-1]] = value
            else:
                section[camel_key] = value
        return json_obj

    def wrapper(tar_cls):
        tar_cls.from_json = from_json
        tar_cls.to_json = to_json
        tar_cls.key_path = key_path
        tar_cls.value_path = value_path
        tar_cls.schema = None
        return tar_cls

    return wrapper


def merge_settings(base, override):
    """Deep-merge an override document into a copy of the base settings document.

    Mappings are merged key by key. Any other override value, lists included,
    replaces the base value. Neither input is modified.
    """
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_settings(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def ensure_path_exists(path):
    os.makedirs(path, exist_ok=True)


def parallel_generator(func, input_list, max_workers=2, use_thread=False, timeout=600, **kwargs):
    """Run ``func`` over the inputs in a worker pool, yielding ``(result, input_index)``.

    Results come in completion order. Jobs must not share state; batch runs
    give each worker its own world and seed.
    """
    pool_cls = ThreadPoolExecutor if use_thread else ProcessPoolExecutor
    with pool_cls(max_workers=max_workers) as executor:
        futures = {}
        for idx, item in enumerate(input_list):
            futures[executor.submit(func, item, **kwargs)] = idx
            logger.debug("Submitted job %d of %s", idx, func.__name__)

        try:
            for future in concurrent.futures.as_completed(futures, timeout=timeout):
                yield future.result(), futures[future]
        except KeyboardInterrupt:
            cancelled = sum(future.cancel() for future in futures)
            logger.warning("Interrupted, %d pending job(s) cancelled", cancelled)
            raise


class LazyLoader(types.ModuleType):
    """Defer a module import until its first attribute access.

    Keeps ``trollector --help`` from importing the solver and perception stacks.
    Modelled on tensorflow's lazy loader [1]_.

    References
    ----------
    .. [1] https://github.com/tensorflow/tensorflow/blob/master/tensorflow/python/util/lazy_loader.py
    """
    def __init__(self, local_name, parent_module_globals, name):
        self._local_name = local_name
        self._parent_module_globals = parent_module_globals
        super().__init__(name)

    def _load(self):
        module = importlib.import_module(self.__name__)
        self._parent_module_globals[self._local_name] = module
        self.__dict__.update(module.__dict__)
        return module

    def __getattr__(self, item):
        return getattr(self._load(), item)

    def __dir__(self):
        return dir(self._load())


def get_filename(path):
    return os.path.splitext(os.path.basename(os.path.abspath(path)))[0]
