"""
Built-in SFTs and the loader for user supplied definitions
"""

import json
import logging
from pathlib import Path
from typing import Callable, Dict, List, Union

from pydantic import ValidationError

from app.schemas.pattern import Derivation, ForbiddenPattern, Pattern, SftDefinition
from app.utils.error_handler import DefinitionError, UnknownSymbol

logger = logging.getLogger(__name__)

BLACK = "■"
WHITE = "□"
RIGHT = "→"
DOWN = "↓"


def _fp(cells, label=None) -> ForbiddenPattern:
    return ForbiddenPattern.build(cells, label=label)


def trivial_sft() -> SftDefinition:
    return SftDefinition(name="trivial", alphabet=["o"], forbidden=[])


def full_shift(k: int = 2) -> SftDefinition:
    alphabet = [WHITE, BLACK] if k == 2 else [str(i) for i in range(k)]
    return SftDefinition(name=f"full{k}", alphabet=alphabet, forbidden=[])


def chess_sft() -> SftDefinition:
    """Checkerboard: equal neighbors forbidden in both directions"""
    forbidden = []
    for s in (BLACK, WHITE):
        forbidden.append(_fp({(0, 0): s, (1, 0): s}, label=f"horizontal {s}{s}"))
        forbidden.append(_fp({(0, 0): s, (0, 1): s}, label=f"vertical {s}{s}"))
    return SftDefinition(name="chess", alphabet=[WHITE, BLACK], forbidden=forbidden)


def even_sft() -> SftDefinition:
    """Hard squares: no two adjacent black cells"""
    return SftDefinition(name="even", alphabet=[WHITE, BLACK], forbidden=[
        _fp({(0, 0): BLACK, (1, 0): BLACK}, label="horizontal ■■"),
        _fp({(0, 0): BLACK, (0, 1): BLACK}, label="vertical ■■"),
    ])


def linear_sft() -> SftDefinition:
    """Black runs shrink by one cell at each end per row going up"""
    return SftDefinition(name="linear", alphabet=[WHITE, BLACK], forbidden=[
        _fp({(-1, 0): BLACK, (0, 0): BLACK, (1, 0): BLACK, (0, 1): WHITE}, label="interior keeps black above"),
        _fp({(-1, 0): WHITE, (0, 0): BLACK, (0, 1): BLACK}, label="left end clears above"),
        _fp({(1, 0): WHITE, (0, 0): BLACK, (0, 1): BLACK}, label="right end clears above"),
    ])


def log_first_layer_sft() -> SftDefinition:
    """First layer of the logarithmic gluing example"""
    return SftDefinition(name="log_first_layer", alphabet=[WHITE, BLACK], forbidden=[
        _fp({(0, 0): WHITE, (1, 0): BLACK, (0, 1): BLACK}, label="white before a run stays white"),
        _fp({(0, 0): BLACK, (1, 0): BLACK, (0, 1): BLACK, (1, 1): WHITE}, label="uniform above a pair"),
        _fp({(0, 0): BLACK, (1, 0): BLACK, (0, 1): WHITE, (1, 1): BLACK}, label="uniform above a pair"),
        _fp({(0, 0): BLACK, (1, 0): WHITE, (0, 1): WHITE, (1, 1): BLACK}, label="right edge"),
    ])


def delta_sft() -> SftDefinition:
    """Curve layer: no stacked ↓, no merging of curves"""
    return SftDefinition(name="delta", alphabet=[RIGHT, DOWN], forbidden=[
        _fp({(0, 0): DOWN, (0, 1): DOWN}, label="stacked ↓"),
        _fp({(0, 1): RIGHT, (1, 1): DOWN, (0, 0): RIGHT, (1, 0): RIGHT}, label="merge"),
    ])


def _robinson() -> SftDefinition:
    from app.services.robinson import robinson_sft
    return robinson_sft()


BUILTINS: Dict[str, Callable[[], SftDefinition]] = {
    "trivial": trivial_sft,
    "full2": full_shift,
    "chess": chess_sft,
    "even": even_sft,
    "linear": linear_sft,
    "log_first_layer": log_first_layer_sft,
    "delta": delta_sft,
    "robinson_adr": _robinson,
}


def get_builtin(name: str) -> SftDefinition:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise DefinitionError(f"Unknown built-in SFT {name!r}", details={"known": sorted(BUILTINS)})
    return factory()


def sft_from_json_dict(data: Dict) -> SftDefinition:
    """Parse the JSON form, mapping schema failures to domain errors"""
    try:
        alphabet = data["alphabet"]
        raw = data.get("forbidden", [])
    except (KeyError, TypeError) as e:
        raise DefinitionError("SFT definition needs name, alphabet and forbidden", original_error=e)
    known = set(alphabet)
    for fp in raw:
        for cell in fp.get("cells", []):
            syms = [cell[2]] if isinstance(cell[2], str) else list(cell[2])
            for s in syms:
                if s not in known:
                    raise UnknownSymbol(f"Unknown symbol {s!r} in forbidden pattern", details={"symbol": s})
    try:
        return SftDefinition(
            name=data.get("name", "custom"),
            alphabet=alphabet,
            forbidden=[ForbiddenPattern.from_json_dict(fp) for fp in raw],
            derivation=Derivation(**data["derivation"]) if data.get("derivation") else None,
        )
    except ValidationError as e:
        raise DefinitionError(f"Invalid SFT definition: {e.errors()[0]['msg']}", original_error=e)


def load_sft(source: Union[str, Path]) -> SftDefinition:
    """Built-in name or path to a JSON definition"""
    source = str(source)
    if source in BUILTINS:
        return get_builtin(source)
    path = Path(source)
    if not path.exists():
        raise DefinitionError(f"No built-in SFT or file named {source!r}")
    logger.info(f"Loading SFT definition from {path}")
    return sft_from_json_dict(json.loads(path.read_text(encoding="utf-8")))


def load_pattern(source: Union[str, Path]) -> Pattern:
    """Pattern from a JSON file ({"cells": [[x, y, s], ...]} or {"rows": [...]})"""
    path = Path(source)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DefinitionError(f"Pattern file {path} is not valid JSON", original_error=e)
    return Pattern.from_json_dict(data)


def builtin_names() -> List[str]:
    return sorted(BUILTINS)
