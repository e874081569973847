"""
Line-oriented workspace files.

A file is a sequence of blocks. A block opens with a header line naming the artifact
(`category arrow`, `presheaf P over arrow`, ...) and continues with body lines until the
next header. `include <path>` loads another file, relative to the including one, and `#`
starts a comment. Artifacts are validated as soon as their block ends and may only
reference names defined before them; `open(<space>)` and `canonical(<space>)` name the
category of opens and the canonical topology of a declared space.

The file extensions (.fc categories, .fp presheaves, .fm presheaf maps, .fj topologies,
.fs spaces, .fb bundles, .fa algebras, .fw workspaces) are conventions only; any block may
appear in any file.
"""

import hashlib
import logging
import re
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field, replace
from enum import StrEnum
from pathlib import Path
from typing import Any

import networkx

from toposkit.classifier import Sieve, omega
from toposkit.errors import ToposkitError, ValidationError
from toposkit.etcs import ToposCorpus, full_corpus
from toposkit.fincat import (
    FinCategory,
    FinFunctor,
    chain,
    commutative_square,
    cyclic_group,
    discrete,
    identity_functor,
    opposite,
    poset_category,
    terminal_category,
    validate_category,
    walking_arrow,
)
from toposkit.geom import yoneda_diagram
from toposkit.internal import InternalGroup, InternalRing, cyclic, symmetric
from toposkit.psh import Diagram, Presheaf, PresheafMap, constant, initial, representable, terminal
from toposkit.sites import GrothendieckTopology, is_sheaf, largest_topology, trivial_topology
from toposkit.spaces import (
    Bundle,
    ContinuousMap,
    DiscontinuousMapError,
    FinSpace,
    Frame,
    canonical_topology,
    continuous_map,
    discrete_space,
    image_functor,
    indiscrete_space,
    open_frame,
    point_space,
    preimage_functor,
    sections_sheaf,
    sierpinski,
)

log = logging.getLogger(__name__)

EXTENSIONS = {".fc", ".fp", ".fm", ".fj", ".fs", ".fb", ".fa", ".fw"}


class WorkspaceError(ToposkitError):
    def __init__(self, path: str, line: int, message: str):
        self.path = path
        self.line = line
        self.message = message
        super().__init__(f"{path}:{line}: {message}")


class ArtifactKind(StrEnum):
    CATEGORY = "category"
    PRESHEAF = "presheaf"
    PRESHEAF_MAP = "presheafmap"
    FUNCTOR = "functor"
    TOPOLOGY = "topology"
    SPACE = "space"
    CONTINUOUS = "continuous"
    BUNDLE = "bundle"
    FRAME = "frame"
    GROUP = "group"
    RING = "ring"
    MODEL = "lex"
    CORPUS = "corpus"


@dataclass(kw_only=True)
class Artifact:
    kind: ArtifactKind
    name: str
    value: Any
    path: str
    line: int


@dataclass(kw_only=True)
class Block:
    keyword: str
    header: re.Match
    path: str
    line: int
    body: list[tuple[int, str]] = field(default_factory=list)

    @property
    def name(self) -> str:
        return self.header.group("name")

    def error(self, message: str, line: int | None = None) -> WorkspaceError:
        return WorkspaceError(self.path, line or self.line, message)


NAME = r"(?P<name>\S+)"
ARROW = r"\s*:\s*(?P<source>\S+)\s*->\s*(?P<target>\S+)"
BUILDER = r"(?:\s*=\s*(?P<builder>.+))?"

HEADERS = {
    "category": re.compile(rf"category\s+{NAME}{BUILDER}"),
    "presheaf": re.compile(rf"presheaf\s+{NAME}\s+over\s+(?P<base>\S+){BUILDER}"),
    "presheafmap": re.compile(rf"presheafmap\s+{NAME}{ARROW}"),
    "functor": re.compile(rf"functor\s+{NAME}{ARROW}{BUILDER}"),
    "topology": re.compile(rf"topology\s+{NAME}\s+over\s+(?P<base>\S+){BUILDER}"),
    "space": re.compile(rf"space\s+{NAME}{BUILDER}"),
    "continuous": re.compile(rf"continuous\s+{NAME}{ARROW}"),
    "bundle": re.compile(rf"bundle\s+{NAME}{ARROW}"),
    "frame": re.compile(rf"frame\s+{NAME}{BUILDER}"),
    "group": re.compile(rf"group\s+{NAME}\s+(?P<mode>over|on)\s+(?P<base>\S+){BUILDER}"),
    "ring": re.compile(rf"ring\s+{NAME}\s+(?P<mode>over|on)\s+(?P<base>\S+){BUILDER}"),
    "lex": re.compile(rf"lex\s+{NAME}{ARROW}{BUILDER}"),
    "corpus": re.compile(rf"corpus\s+{NAME}\s+over\s+(?P<base>\S+){BUILDER}"),
}

MAPS_TO = r"(\S+)\s*->\s*(\S+)"
TYPED = r"(\S+)\s*:\s*(\S+)\s*->\s*(\S+)"
BINARY = r"(\S+)\s*:\s*(\S+)\s+(\S+)\s*->\s*(\S+)"
CONSTANT = r"(\S+)\s*:\s*(\S+)"
ITEMS = r"\{(.*)\}"


def _grammar(**rules: str) -> dict[str, re.Pattern]:
    return {keyword: re.compile(rf"{keyword}\s*{rule}") for keyword, rule in rules.items()}


def _items(text: str) -> list[str]:
    return [item for item in re.split(r"[,\s]+", text.strip()) if item]


def _lines(
    block: Block, grammar: dict[str, re.Pattern]
) -> Iterable[tuple[str, int, tuple[str, ...]]]:
    for line, text in block.body:
        keyword = text.split(maxsplit=1)[0]
        pattern = grammar.get(keyword)
        if pattern is None:
            raise block.error(f"unexpected '{keyword}' in {block.keyword} {block.name}", line)
        match = pattern.fullmatch(text)
        if match is None:
            raise block.error(f"malformed {keyword} line: {text}", line)
        yield keyword, line, match.groups()


def _no_body(block: Block) -> None:
    if block.body:
        message = f"{block.keyword} {block.name} is built from a builder and takes no body"
        raise block.error(message, block.body[0][0])


def _int(block: Block, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise block.error(f"expected an integer, got {text!r}") from None


def _checked(block: Block, report) -> None:
    if not report.ok:
        raise block.error(str(report))


class Workspace:
    """Named artifacts loaded from workspace files, in load order."""

    def __init__(self):
        self.artifacts: dict[str, Artifact] = {}
        # path as given -> sha256 of its content
        self.sources: dict[str, str] = {}
        self.files: dict[Path, list[Artifact]] = {}
        self._loading: set[Path] = set()
        self._digests: dict[Path, str] = {}

    def __len__(self):
        return len(self.artifacts)

    def __contains__(self, name: str):
        return name in self.artifacts

    def load(self, path: str | Path) -> list[Artifact]:
        """Artifacts of `path` and of the files it includes; loading a file twice is a no-op."""
        resolved = Path(path).resolve()
        if resolved in self.files:
            self.sources.setdefault(str(path), self._digests[resolved])
            return self.files[resolved]
        if resolved in self._loading:
            raise WorkspaceError(str(path), 0, "include cycle")
        try:
            text = resolved.read_text()
        except OSError as e:
            raise WorkspaceError(str(path), 0, f"cannot read file ({e.strerror})") from None
        self._loading.add(resolved)
        digest = hashlib.sha256(text.encode()).hexdigest()
        self._digests[resolved] = self.sources[str(path)] = digest
        try:
            loaded = self.parse_text(text, str(path), resolved.parent)
        finally:
            self._loading.discard(resolved)
        self.files[resolved] = loaded
        log.debug(f"Loaded {len(loaded)} artifact(s) from {path}")
        return loaded

    def parse_text(
        self, text: str, path: str = "<string>", directory: Path | None = None
    ) -> list[Artifact]:
        loaded: list[Artifact] = []
        block: Block | None = None
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            keyword = line.split(maxsplit=1)[0]
            if keyword == "include":
                if block is not None:
                    loaded.append(self._finish(block))
                    block = None
                target = line.split(maxsplit=1)[1:]
                if not target:
                    raise WorkspaceError(path, number, "include needs a path")
                loaded += self.load((directory or Path.cwd()) / target[0])
            elif keyword in HEADERS:
                if block is not None:
                    loaded.append(self._finish(block))
                header = HEADERS[keyword].fullmatch(line)
                if header is None:
                    raise WorkspaceError(path, number, f"malformed {keyword} header: {line}")
                block = Block(keyword=keyword, header=header, path=path, line=number)
            elif block is None:
                raise WorkspaceError(path, number, f"'{keyword}' outside of any block")
            else:
                block.body.append((number, line))
        if block is not None:
            loaded.append(self._finish(block))
        return loaded

    def _finish(self, block: Block) -> Artifact:
        if block.name in self.artifacts:
            first = self.artifacts[block.name]
            raise block.error(
                f"duplicate name {block.name} (first defined at {first.path}:{first.line})"
            )
        try:
            value = BUILDERS[block.keyword](self, block)
        except WorkspaceError:
            raise
        except ValidationError as e:
            raise block.error(str(e.report))
        except ToposkitError as e:
            raise block.error(str(e))
        artifact = Artifact(
            kind=ArtifactKind(block.keyword),
            name=block.name,
            value=value,
            path=block.path,
            line=block.line,
        )
        self.artifacts[block.name] = artifact
        return artifact

    def get(
        self, name: str, kind: ArtifactKind, block: Block | None = None, line: int | None = None
    ) -> Any:
        """Resolve a reference; `block` and `line` locate the referencing line in errors."""
        derived = self._derived(name, kind)
        if derived is not None:
            return derived
        artifact = self.artifacts.get(name)
        if artifact is None or artifact.kind != kind:
            found = f" (it is a {artifact.kind})" if artifact is not None else ""
            message = f"unknown {kind} {name}{found}"
            if block is not None:
                raise block.error(message, line)
            raise WorkspaceError("<workspace>", 0, message)
        return artifact.value

    def _derived(self, name: str, kind: ArtifactKind) -> Any:
        match = re.fullmatch(r"(open|canonical)\((\S+)\)", name)
        if match is None:
            return None
        space = self.artifacts.get(match.group(2))
        if space is None or space.kind != ArtifactKind.SPACE:
            return None
        if match.group(1) == "open" and kind == ArtifactKind.CATEGORY:
            return open_frame(space.value).category
        if match.group(1) == "canonical" and kind == ArtifactKind.TOPOLOGY:
            return canonical_topology(space.value).topology
        return None

    def resolve(self, reference: str, kind: ArtifactKind) -> Any:
        """
        A name, or the path of a workspace file whose first artifact of `kind` is meant
        (artifacts defined in the file itself before those of its includes).
        """
        path = Path(reference)
        if path.suffix in EXTENSIONS and path.is_file():
            loaded = self.load(reference)
            own = [a for a in loaded if a.path == reference]
            for artifact in own + loaded:
                if artifact.kind == kind:
                    return artifact.value
            raise WorkspaceError(reference, 0, f"no {kind} in {reference}")
        return self.get(reference, kind)

    def of_kind(self, kind: ArtifactKind) -> list[Artifact]:
        return [a for a in self.artifacts.values() if a.kind == kind]


def parse_workspace(paths: Iterable[str | Path]) -> Workspace:
    workspace = Workspace()
    for path in paths:
        workspace.load(path)
    return workspace


CATEGORY_BUILDERS: dict[str, Callable[..., FinCategory]] = {
    "terminal": terminal_category,
    "arrow": walking_arrow,
    "square": commutative_square,
}
CATEGORY_SIZED_BUILDERS: dict[str, Callable[[int], FinCategory]] = {
    "chain": chain,
    "discrete": discrete,
    "cyclic": cyclic_group,
}


def build_category(ws: Workspace, block: Block) -> FinCategory:
    name, builder = block.name, block.header.group("builder")
    if builder:
        _no_body(block)
        words = builder.split()
        if words[0] in CATEGORY_BUILDERS and len(words) == 1:
            category = CATEGORY_BUILDERS[words[0]]()
        elif words[0] in CATEGORY_SIZED_BUILDERS and len(words) == 2:
            category = CATEGORY_SIZED_BUILDERS[words[0]](_int(block, words[1]))
        elif words[0] == "opposite" and len(words) == 2:
            category = opposite(ws.get(words[1], ArtifactKind.CATEGORY, block))
        else:
            raise block.error(f"unknown category builder: {builder}")
        return replace(category, name=name)
    grammar = _grammar(
        object=r"(\S+)",
        morphism=TYPED,
        compose=r"(\S+)\s*\.\s*(\S+)\s*=\s*(\S+)",
        leq=r"(\S+)\s+(\S+)",
    )
    objects, morphisms, composites, relations = [], [], {}, []
    for keyword, _, groups in _lines(block, grammar):
        match keyword:
            case "object":
                objects.append(groups[0])
            case "morphism":
                morphisms.append(groups)
            case "compose":
                composites[(groups[0], groups[1])] = groups[2]
            case "leq":
                relations.append(groups)
    if relations:
        if morphisms or composites:
            raise block.error("a category is either a poset (leq lines) or explicit, not both")
        return poset_category(name, objects, relations)
    category = FinCategory.build(name, objects, morphisms, composites)
    _checked(block, validate_category(category))
    return category


def build_presheaf(ws: Workspace, block: Block) -> Presheaf:
    base = ws.get(block.header.group("base"), ArtifactKind.CATEGORY, block)
    name, builder = block.name, block.header.group("builder")
    if builder:
        _no_body(block)
        words = builder.split()
        match words:
            case ["terminal"]:
                presheaf = terminal(base)
            case ["initial"]:
                presheaf = initial(base)
            case ["constant", n]:
                presheaf = constant(base, _int(block, n))
            case ["representable", a] if a in base.objects:
                presheaf = representable(base, a)
            case ["omega"]:
                presheaf = omega(base).omega
            case ["sections", bundle]:
                presheaf = sections_sheaf(ws.get(bundle, ArtifactKind.BUNDLE, block))
                if presheaf.base != base:
                    raise block.error(f"sections of {bundle} do not live over {base.name}")
            case _:
                raise block.error(f"unknown presheaf builder: {builder}")
        return presheaf.renamed(name)
    grammar = _grammar(set=rf"(\S+)\s*=\s*{ITEMS}", act=TYPED)
    sets: dict[str, list[str]] = {}
    actions: dict[str, dict[str, str]] = {}
    for keyword, line, groups in _lines(block, grammar):
        if keyword == "set":
            a, items = groups[0], _items(groups[1])
            if a not in base.objects:
                raise block.error(f"unknown object {a} of {base.name}", line)
            if len(set(items)) != len(items):
                raise block.error(f"repeated element in the set at {a}", line)
            sets[a] = items
        else:
            f, y, x = groups
            if not base.has_morphism(f):
                raise block.error(f"unknown morphism {f} of {base.name}", line)
            actions.setdefault(f, {})[y] = x
    for m in base.morphisms:
        if not base.is_identity(m.id) and not sets.get(m.cod):
            actions.setdefault(m.id, {})
    try:
        presheaf = Presheaf.build(base, sets, actions, name=name)
    except KeyError as e:
        raise block.error(f"incomplete or inconsistent actions: {e.args[0]}")
    _checked(block, presheaf.validate())
    return presheaf


def _labelled(presheaf: Presheaf, a: str) -> dict[str, Any]:
    return {str(presheaf.label(a, x)): presheaf.label(a, x) for x in presheaf.elements(a)}


def build_presheaf_map(ws: Workspace, block: Block) -> PresheafMap:
    source = ws.get(block.header.group("source"), ArtifactKind.PRESHEAF, block)
    target = ws.get(block.header.group("target"), ArtifactKind.PRESHEAF, block)
    mapping: dict[str, dict[str, str]] = {}
    for _, _, (a, x, y) in _lines(block, _grammar(component=TYPED)):
        mapping.setdefault(a, {})[x] = y
    lookup = {a: _labelled(source, a) for a in source.base.objects}
    targets = {a: _labelled(target, a) for a in target.base.objects}
    try:
        resolved = {
            a: {lookup[a][x]: targets[a][y] for x, y in table.items()}
            for a, table in mapping.items()
        }
        h = PresheafMap.build(source, target, resolved, name=block.name)
    except KeyError as e:
        raise block.error(f"component references an unknown element or object: {e.args[0]}")
    _checked(block, h.validate())
    return h


def build_functor(ws: Workspace, block: Block) -> FinFunctor:
    builder = block.header.group("builder")
    if builder:
        _no_body(block)
        match builder.split():
            case ["identity"]:
                source = ws.get(block.header.group("source"), ArtifactKind.CATEGORY, block)
                functor = identity_functor(source)
            case ["preimage", f]:
                functor = preimage_functor(ws.get(f, ArtifactKind.CONTINUOUS, block))
            case ["image", f]:
                try:
                    functor = image_functor(ws.get(f, ArtifactKind.CONTINUOUS, block))
                except ValueError as e:
                    raise block.error(str(e))
            case _:
                raise block.error(f"unknown functor builder: {builder}")
        declared = (
            ws.get(block.header.group("source"), ArtifactKind.CATEGORY, block),
            ws.get(block.header.group("target"), ArtifactKind.CATEGORY, block),
        )
        if declared != (functor.source, functor.target):
            raise block.error(
                f"{builder} is a functor {functor.source.name} -> {functor.target.name}"
            )
        return replace(functor, name=block.name)
    source = ws.get(block.header.group("source"), ArtifactKind.CATEGORY, block)
    target = ws.get(block.header.group("target"), ArtifactKind.CATEGORY, block)
    objects, morphisms = {}, {}
    for keyword, _, (x, y) in _lines(block, _grammar(object=MAPS_TO, morphism=MAPS_TO)):
        (objects if keyword == "object" else morphisms)[x] = y
    for a in source.objects:
        if a in objects and target.identities.get(objects[a]) is not None:
            morphisms.setdefault(source.identity(a), target.identity(objects[a]))
    functor = FinFunctor(
        name=block.name,
        source=source,
        target=target,
        object_map=objects,
        morphism_map=morphisms,
    )
    _checked(block, functor.validate())
    return functor


def _generated_sieve(
    block: Block, base: FinCategory, apex: str, generators: list[str], line: int
) -> Sieve:
    members: set[str] = set()
    for f in generators:
        if not base.has_morphism(f) or base.cod(f) != apex:
            raise block.error(f"{f} is not a morphism into {apex}", line)
        members |= Sieve.principal(base, f).members
    return Sieve(base=base, apex=apex, members=frozenset(members))


def build_topology(ws: Workspace, block: Block) -> GrothendieckTopology:
    base = ws.get(block.header.group("base"), ArtifactKind.CATEGORY, block)
    builder = block.header.group("builder")
    if builder:
        _no_body(block)
        match builder.split():
            case ["trivial"]:
                topology = trivial_topology(base)
            case ["largest"]:
                topology = largest_topology(base)
            case _:
                raise block.error(f"unknown topology builder: {builder}")
        return replace(topology, name=block.name)
    covers: dict[str, list[Sieve]] = {}
    for _, line, (a, items) in _lines(block, _grammar(cover=rf"(\S+)\s*=\s*{ITEMS}")):
        if a not in base.objects:
            raise block.error(f"unknown object {a} of {base.name}", line)
        covers.setdefault(a, []).append(_generated_sieve(block, base, a, _items(items), line))
    topology = GrothendieckTopology.from_covers(base, covers, name=block.name)
    _checked(block, topology.validate())
    return topology


def build_space(ws: Workspace, block: Block) -> FinSpace:
    builder = block.header.group("builder")
    if builder:
        _no_body(block)
        match builder.split():
            case ["point"]:
                space = point_space()
            case ["sierpinski"]:
                space = sierpinski()
            case ["discrete", n]:
                space = discrete_space(_int(block, n))
            case ["indiscrete", n]:
                space = indiscrete_space(_int(block, n))
            case _:
                raise block.error(f"unknown space builder: {builder}")
        return replace(space, name=block.name)
    points: list[str] = []
    opens: list[list[str]] = []
    for keyword, line, groups in _lines(block, _grammar(points=r"(.*)", open=ITEMS)):
        if keyword == "points":
            points += _items(groups[0])
        else:
            opens.append(_items(groups[0]))
    space = FinSpace.build(block.name, points, opens)
    _checked(block, space.validate())
    return space


def _point_map(block: Block, keyword: str) -> dict[str, str]:
    return {x: y for _, _, (x, y) in _lines(block, _grammar(**{keyword: MAPS_TO}))}


def build_continuous(ws: Workspace, block: Block) -> ContinuousMap:
    source = ws.get(block.header.group("source"), ArtifactKind.SPACE, block)
    target = ws.get(block.header.group("target"), ArtifactKind.SPACE, block)
    mapping = _point_map(block, "send")
    missing = [x for x in source.points if mapping.get(x) not in target.points]
    if missing:
        raise block.error(f"point {missing[0]} is not sent to a point of {target.name}")
    try:
        return continuous_map(source, target, mapping)
    except DiscontinuousMapError as e:
        raise block.error(str(e))


def build_bundle(ws: Workspace, block: Block) -> Bundle:
    total = ws.get(block.header.group("source"), ArtifactKind.SPACE, block)
    base = ws.get(block.header.group("target"), ArtifactKind.SPACE, block)
    projection = _point_map(block, "project")
    bundle = Bundle(name=block.name, total=total, base=base, projection=projection)
    _checked(block, bundle.validate())
    return bundle


def build_frame(ws: Workspace, block: Block) -> Frame:
    builder = block.header.group("builder")
    if builder:
        _no_body(block)
        match builder.split():
            case ["open", space]:
                frame = open_frame(ws.get(space, ArtifactKind.SPACE, block)).frame
                return replace(frame, name=block.name)
            case _:
                raise block.error(f"unknown frame builder: {builder}")
    elements: list[str] = []
    graph = networkx.DiGraph()
    for keyword, _, groups in _lines(block, _grammar(element=r"(\S+)", leq=r"(\S+)\s+(\S+)")):
        if keyword == "element":
            elements.append(groups[0])
            graph.add_node(groups[0])
        else:
            graph.add_edge(*groups)
    unknown = [x for x in graph.nodes if x not in elements]
    if unknown:
        raise block.error(f"leq mentions undeclared element {unknown[0]}")
    closure = networkx.transitive_closure(graph, reflexive=True)
    frame = Frame(
        name=block.name,
        elements=tuple(elements),
        leq=tuple(tuple(closure.has_edge(x, y) for y in elements) for x in elements),
    )
    _checked(block, frame.validate())
    return frame


def _pointwise_tables(block: Block, carrier: Presheaf, grammar: dict[str, re.Pattern]) -> dict:
    """`op object : args -> result` lines as element indices, keyed by (op, object, args)."""
    index = {
        a: {str(carrier.label(a, x)): x for x in carrier.elements(a)} for a in carrier.base.objects
    }
    tables = {}
    for keyword, line, groups in _lines(block, grammar):
        a, *values = groups
        if a not in index:
            raise block.error(f"unknown object {a}", line)
        try:
            resolved = [index[a][v] for v in _items(" ".join(values))]
        except KeyError as e:
            raise block.error(f"unknown element {e.args[0]} at {a}", line)
        tables[(keyword, a, *resolved[:-1])] = resolved[-1]
    return tables


def _lookup(block: Block, tables: dict, *key) -> int:
    if key not in tables:
        raise block.error(f"no {key[0]} entry for {key[1:]}")
    return tables[key]


def _check_typing(block: Block, maps: dict[str, PresheafMap]) -> None:
    for label, m in maps.items():
        report = m.validate()
        if not report.ok:
            raise block.error(f"{label}: {report}")


def build_group(ws: Workspace, block: Block) -> InternalGroup:
    mode, base_name, builder = (block.header.group(g) for g in ("mode", "base", "builder"))
    if mode == "over":
        base = ws.get(base_name, ArtifactKind.CATEGORY, block)
        _no_body(block)
        match (builder or "").split():
            case ["cyclic", n]:
                group = cyclic(_int(block, n), base)
            case ["symmetric", k]:
                group = symmetric(_int(block, k), base)
            case _:
                raise block.error(f"unknown group builder: {builder}")
        return replace(group, name=block.name)
    if builder:
        raise block.error("a pointwise group takes no builder")
    carrier = ws.get(base_name, ArtifactKind.PRESHEAF, block)
    grammar = _grammar(mul=BINARY, inv=TYPED, unit=CONSTANT)
    tables = _pointwise_tables(block, carrier, grammar)
    for a in carrier.base.objects:
        for x in carrier.elements(a):
            _lookup(block, tables, "inv", a, x)
            for y in carrier.elements(a):
                _lookup(block, tables, "mul", a, x, y)
        _lookup(block, tables, "unit", a)
    group = InternalGroup.pointwise(
        block.name,
        carrier,
        multiply=lambda a, x, y: tables[("mul", a, x, y)],
        inverse=lambda a, x: tables[("inv", a, x)],
        one=lambda a: tables[("unit", a)],
    )
    _check_typing(block, {"mul": group.mult, "inv": group.inv, "unit": group.unit})
    return group


def build_ring(ws: Workspace, block: Block) -> InternalRing:
    mode, base_name, builder = (block.header.group(g) for g in ("mode", "base", "builder"))
    if mode == "over":
        base = ws.get(base_name, ArtifactKind.CATEGORY, block)
        _no_body(block)
        match (builder or "").split():
            case ["integers", n] if _int(block, n) >= 1:
                return replace(InternalRing.integers(int(n), base), name=block.name)
            case _:
                raise block.error(f"unknown ring builder: {builder}")
    if builder:
        raise block.error("a pointwise ring takes no builder")
    carrier = ws.get(base_name, ArtifactKind.PRESHEAF, block)
    grammar = _grammar(add=BINARY, mul=BINARY, neg=TYPED, zero=CONSTANT, one=CONSTANT)
    tables = _pointwise_tables(block, carrier, grammar)
    objects = carrier.base.objects
    for a in objects:
        _lookup(block, tables, "zero", a)
        _lookup(block, tables, "one", a)
        for x in carrier.elements(a):
            _lookup(block, tables, "neg", a, x)
            for y in carrier.elements(a):
                _lookup(block, tables, "add", a, x, y)
                _lookup(block, tables, "mul", a, x, y)
    ring = InternalRing.pointwise(
        block.name,
        carrier,
        add=lambda a, x, y: tables[("add", a, x, y)],
        mul=lambda a, x, y: tables[("mul", a, x, y)],
        neg=lambda a, x: tables[("neg", a, x)],
        zero=lambda a: tables[("zero", a)],
        one=lambda a: tables[("one", a)],
    )
    _check_typing(
        block,
        {"add": ring.add, "mul": ring.mul, "neg": ring.neg, "zero": ring.zero, "one": ring.one},
    )
    return ring


def build_model(ws: Workspace, block: Block) -> Diagram:
    shape = ws.get(block.header.group("source"), ArtifactKind.CATEGORY, block)
    base = ws.get(block.header.group("target"), ArtifactKind.CATEGORY, block)
    builder = block.header.group("builder")
    if builder:
        _no_body(block)
        if builder.strip() != "yoneda" or shape != base:
            raise block.error(f"unknown lex builder: {builder} (yoneda needs C -> C)")
        return yoneda_diagram(shape)
    objects, maps = {}, {}
    grammar = _grammar(object=r"(\S+)\s*=\s*(\S+)", map=r"(\S+)\s*=\s*(\S+)")
    for keyword, line, (x, ref) in _lines(block, grammar):
        if keyword == "object":
            objects[x] = ws.get(ref, ArtifactKind.PRESHEAF, block, line)
        else:
            maps[x] = ws.get(ref, ArtifactKind.PRESHEAF_MAP, block, line)
    missing = [c for c in shape.objects if c not in objects]
    if missing:
        raise block.error(f"no object given for {missing[0]}")
    diagram = Diagram(base=base, shape=shape, objects=objects, maps=maps)
    _checked(block, diagram.validate())
    return diagram


def build_corpus(ws: Workspace, block: Block) -> ToposCorpus:
    base = ws.get(block.header.group("base"), ArtifactKind.CATEGORY, block)
    builder = block.header.group("builder")
    members, topology = [], None
    for keyword, line, (ref,) in _lines(block, _grammar(member=r"(\S+)", sheaves=r"(\S+)")):
        if keyword == "member":
            members.append(ws.get(ref, ArtifactKind.PRESHEAF, block, line))
        else:
            topology = ws.get(ref, ArtifactKind.TOPOLOGY, block, line)
    if topology is not None:
        for p in members:
            if not is_sheaf(p, topology).is_sheaf:
                raise block.error(f"member {p.name} is not a sheaf for {topology.name}")
    if builder:
        match builder.split():
            case ["full", n]:
                members = full_corpus(base, _int(block, n), topology).presheaves + members
            case _:
                raise block.error(f"unknown corpus builder: {builder}")
    return ToposCorpus.of(base, members, block.name, topology)


BUILDERS: dict[str, Callable[[Workspace, Block], Any]] = {
    "category": build_category,
    "presheaf": build_presheaf,
    "presheafmap": build_presheaf_map,
    "functor": build_functor,
    "topology": build_topology,
    "space": build_space,
    "continuous": build_continuous,
    "bundle": build_bundle,
    "frame": build_frame,
    "group": build_group,
    "ring": build_ring,
    "lex": build_model,
    "corpus": build_corpus,
}
