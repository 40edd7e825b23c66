"""
Fixture catalogue

Programs live as `.cpl` files next to `catalogue.yaml`, which records each
fixture's default predicate, expected bound or distribution and a horizon
large enough for the exact engine. Parameterised fixtures (`bloom`,
`bloom-seq`, `hash_fixture`) are generated from source templates.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import yaml

from modules.analytics import bloom_bound
from modules.distributions import Dist
from modules.errors import UnknownFixtureError
from modules.parser import LoadedProgram, ModuleLoader
from modules.predicates import Predicate, parse_predicate
from modules.syntax import Expr, Int, Value, contains_tape_ops
from utils.constants import CATALOGUE_FILE, STDLIB_MODULE, UNBOUNDED
from utils.helpers import parse_rational

logger = logging.getLogger(__name__)

KINDS = ("bound", "distribution", "safety", "module")

# Short parameter names accepted alongside the long ones
_ALIASES = {"S": "size", "k": "hashes", "xs": "keys", "y": "query", "K_size": "keys", "V_size": "values"}


@dataclass
class Fixture:
    """A catalogue program together with its default query"""
    name: str
    kind: str
    source: str
    description: str = ""
    predicate_text: Optional[str] = None
    bound: Optional[Fraction] = None
    expected: Optional[Dist] = None
    # steps, or UNBOUNDED for analyses without a step limit
    horizon: Optional[Union[int, str]] = None
    rejection_rate: Optional[Fraction] = None
    params: Dict[str, Any] = field(default_factory=dict)
    source_dir: Optional[Path] = None

    @property
    def predicate(self) -> Optional[Predicate]:
        return parse_predicate(self.predicate_text) if self.predicate_text else None

    @property
    def is_module(self) -> bool:
        return self.kind == "module"

    def load(self, loader: Optional[ModuleLoader] = None) -> LoadedProgram:
        loader = loader or get_loader(self.source_dir)
        return loader.load(self.source, source_dir=self.source_dir, where=f"fixture '{self.name}'")

    def program(self, loader: Optional[ModuleLoader] = None) -> Expr:
        """Closed core expression of the fixture's main program"""
        if self.is_module:
            raise ValueError(f"Fixture '{self.name}' is a module and has no main expression")
        return self.load(loader).expr


def _fixtures_dir(fixtures_dir: Optional[Path]) -> Path:
    if fixtures_dir is not None:
        return Path(fixtures_dir)
    from modules.config import Config
    return Config().fixtures.fixtures_dir


@lru_cache(maxsize=8)
def _loader_for(directory: Path) -> ModuleLoader:
    return ModuleLoader([directory], prelude=(STDLIB_MODULE,))


def get_loader(fixtures_dir: Optional[Path] = None) -> ModuleLoader:
    """Module loader over the fixtures directory with the stdlib as prelude"""
    return _loader_for(_fixtures_dir(fixtures_dir).resolve())


@lru_cache(maxsize=8)
def _read_catalogue(path: Path) -> Dict[str, Any]:
    logger.debug(f"Reading fixture catalogue {path}")
    with open(path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}
    return {"fixtures": data.get("fixtures") or {}, "templates": data.get("templates") or {}}


def load_catalogue(fixtures_dir: Optional[Path] = None) -> Dict[str, Any]:
    directory = _fixtures_dir(fixtures_dir).resolve()
    path = directory / CATALOGUE_FILE
    if not path.is_file():
        raise FileNotFoundError(f"Fixture catalogue not found: {path}")
    return _read_catalogue(path)


def _expected_dist(text: Optional[str]) -> Optional[Dist]:
    if not text:
        return None
    text = str(text).strip()
    if text.startswith("uniform(") and text.endswith(")"):
        return Dist.uniform(int(text[len("uniform("):-1])).map(Int)
    raise ValueError(f"Unsupported expected distribution '{text}'")


def _optional_rational(value) -> Optional[Fraction]:
    return None if value is None else parse_rational(str(value))


def _horizon(name: str, value) -> Optional[Union[int, str]]:
    if value is None or value == UNBOUNDED or (isinstance(value, int) and value >= 0):
        return value
    raise ValueError(f"Fixture '{name}' has horizon {value!r}; expected a step count or '{UNBOUNDED}'")


def _from_entry(name: str, entry: Dict[str, Any], directory: Path) -> Fixture:
    kind = entry.get("kind", "bound")
    if kind not in KINDS:
        raise ValueError(f"Fixture '{name}' has unknown kind '{kind}'")
    path = directory / entry["file"]
    return Fixture(
        name=name,
        kind=kind,
        source=path.read_text(encoding="utf-8"),
        description=entry.get("description", ""),
        predicate_text=entry.get("predicate"),
        bound=_optional_rational(entry.get("bound")),
        expected=_expected_dist(entry.get("expected")),
        horizon=_horizon(name, entry.get("horizon")),
        rejection_rate=_optional_rational(entry.get("rejection_rate")),
        source_dir=directory,
    )


def _list_literal(items: Sequence[int]) -> str:
    return "[" + "; ".join(str(int(item)) for item in items) + "]"


def _normalise_params(params: Dict[str, Any]) -> Dict[str, Any]:
    return {_ALIASES.get(key, key): value for key, value in params.items()}


def _bloom(name: str, template: Dict[str, Any], params: Dict[str, Any], directory: Path) -> Fixture:
    values = {**template.get("defaults", {}), **params}
    size, hashes = int(values["size"]), int(values["hashes"])
    keys, query = [int(x) for x in values["keys"]], int(values["query"])
    if size < 1 or hashes < 1:
        raise ValueError(f"Bloom filter needs size >= 1 and hashes >= 1, got size={size}, hashes={hashes}")
    if query in keys:
        raise ValueError(f"Query {query} is one of the inserted keys {keys}")
    if len(set(keys)) != len(keys):
        raise ValueError(f"Inserted keys must be distinct, got {keys}")
    source = template["source"].format(size=size, hashes=hashes, keys=_list_literal(keys), query=query)
    return Fixture(
        name=name,
        kind="bound",
        source=source,
        description=template.get("description", ""),
        predicate_text=template["predicate"],
        bound=bloom_bound(size, hashes, len(keys)),
        horizon=_horizon(name, template.get("horizon")),
        params={"size": size, "hashes": hashes, "keys": keys, "query": query},
        source_dir=directory,
    )


def _hash(name: str, template: Dict[str, Any], params: Dict[str, Any], directory: Path) -> Fixture:
    values = {**template.get("defaults", {}), **params}
    keys, domain = int(values["keys"]), int(values["values"])
    if keys < 1 or domain < 1:
        raise ValueError(f"Hash fixture needs keys >= 1 and values >= 1, got keys={keys}, values={domain}")
    source = template["source"].format(vmax=domain - 1, last_key=keys - 1)
    if keys == 1:
        # both threads hash key 0, so the values can never differ
        predicate, bound = f"exists n in 0..{domain - 1}. ret == (n, n)", Fraction(0)
    else:
        predicate, bound = "fst ret != snd ret", Fraction(1, domain)
    return Fixture(
        name=name,
        kind="bound",
        source=source,
        description=template.get("description", ""),
        predicate_text=predicate,
        bound=bound,
        horizon=_horizon(name, template.get("horizon")),
        params={"keys": keys, "values": domain},
        source_dir=directory,
    )


_BUILDERS = {"bloom": _bloom, "bloom-seq": _bloom, "hash_fixture": _hash}


def list_fixtures(fixtures_dir: Optional[Path] = None) -> List[str]:
    """Names of every catalogue entry and parameterised fixture"""
    catalogue = load_catalogue(fixtures_dir)
    return sorted(list(catalogue["fixtures"]) + list(catalogue["templates"]))


def fixture(name: str, fixtures_dir: Optional[Path] = None, **params) -> Fixture:
    """
    Look up a fixture by name

    Args:
        name: Catalogue name, e.g. "conTwoAdd-I1" or "bloom"
        fixtures_dir: Directory holding the catalogue (defaults to the configured one)
        **params: Parameters of a generated fixture, e.g. size=2, hashes=1, keys=[0, 1], query=2

    Returns:
        Fixture

    Raises:
        UnknownFixtureError: If the name is not in the catalogue
        ValueError: For parameters given to a plain fixture or out of range
    """
    directory = _fixtures_dir(fixtures_dir).resolve()
    catalogue = load_catalogue(directory)
    if name in catalogue["fixtures"]:
        if params:
            raise ValueError(f"Fixture '{name}' takes no parameters, got {sorted(params)}")
        return _from_entry(name, catalogue["fixtures"][name], directory)
    if name in catalogue["templates"]:
        return _BUILDERS[name](name, catalogue["templates"][name], _normalise_params(params), directory)
    raise UnknownFixtureError(name, list_fixtures(directory))


def stdlib(fixtures_dir: Optional[Path] = None) -> Dict[str, Value]:
    """The stdlib's closed definitions, keyed by name"""
    return get_loader(fixtures_dir).module(STDLIB_MODULE)


def tape_fixtures(fixtures_dir: Optional[Path] = None) -> List[str]:
    """Runnable catalogue fixtures whose programs use tapes"""
    names = []
    catalogue = load_catalogue(fixtures_dir)
    for name, entry in catalogue["fixtures"].items():
        if entry.get("kind") == "module":
            continue
        if contains_tape_ops(fixture(name, fixtures_dir).program()):
            names.append(name)
    return sorted(names)
