"""Adapters for the published evaluation-dataset distribution formats.

Three-line samples of each format live in docs/dataset_formats.md.
"""

from .data import normalize_lemma
from .errors import DataError
from .evaluation import RelpronItem, RelpronProperty, TriplePairItem, WordPairItem

_POS_SUFFIXES = ("-n", "-v", "-j", "_N", "_V", "_J")


def _strip_pos(token):
    for suf in _POS_SUFFIXES:
        if token.endswith(suf):
            return token[: -len(suf)]
    return token


def _lemma(token):
    return normalize_lemma(_strip_pos(token))


def load_men(path):
    """MEN: ``word1 word2 score`` per line, space-separated.

    Both the natural-form and the lemma-form (``dog-n``) distributions
    parse; POS suffixes are stripped.
    """
    items = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 3:
                raise DataError(f"MEN line {lineno}: expected 3 fields")
            items.append(WordPairItem(_lemma(parts[0]), _lemma(parts[1]), float(parts[2])))
    if not items:
        raise DataError(f"no pairs in {path}")
    return items


def load_simlex(path):
    """SimLex-999: tab-separated with a header; uses word1, word2,
    SimLex999 columns."""
    items = []
    with open(path, encoding="utf-8") as f:
        header = f.readline().rstrip("\n").split("\t")
        try:
            i1, i2, ig = (
                header.index("word1"),
                header.index("word2"),
                header.index("SimLex999"),
            )
        except ValueError as exc:
            raise DataError("SimLex-999 header missing expected columns") from exc
        for lineno, line in enumerate(f, 2):
            parts = line.rstrip("\n").split("\t")
            if len(parts) <= max(i1, i2, ig):
                raise DataError(f"SimLex line {lineno}: too few fields")
            items.append(
                WordPairItem(_lemma(parts[i1]), _lemma(parts[i2]), float(parts[ig]))
            )
    if not items:
        raise DataError(f"no pairs in {path}")
    return items


def load_gs2011(path):
    """GS2011: space-separated with header ``participant verb subject
    object landmark input hilo``; one judgment record per line."""
    items = []
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        try:
            iv, isub, iobj, iland, iin = (
                header.index("verb"),
                header.index("subject"),
                header.index("object"),
                header.index("landmark"),
                header.index("input"),
            )
        except ValueError as exc:
            raise DataError("GS2011 header missing expected columns") from exc
        for lineno, line in enumerate(f, 2):
            parts = line.split()
            if not parts:
                continue
            if len(parts) <= max(iv, isub, iobj, iland, iin):
                raise DataError(f"GS2011 line {lineno}: too few fields")
            items.append(
                TriplePairItem(
                    subject=_lemma(parts[isub]),
                    verb1=_lemma(parts[iv]),
                    object=_lemma(parts[iobj]),
                    verb2=_lemma(parts[iland]),
                    gold=float(parts[iin]),
                )
            )
    if not items:
        raise DataError(f"no judgments in {path}")
    return items


def load_relpron(path):
    """RELPRON: ``SBJ term_N: head_N that X Y`` per line, where the
    clause is ``verb_V object_N`` for subject relatives and
    ``subject_N verb_V`` for object relatives."""
    term_props = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 6 or parts[3] != "that":
                raise DataError(f"RELPRON line {lineno}: unexpected format")
            kind, term_tok, head_tok, _, a, b = parts
            term = _lemma(term_tok.rstrip(":"))
            head = _lemma(head_tok)
            if kind == "SBJ":
                prop = RelpronProperty(head, _lemma(a), _lemma(b), "SUBJECT")
            elif kind == "OBJ":
                prop = RelpronProperty(head, _lemma(b), _lemma(a), "OBJECT")
            else:
                raise DataError(f"RELPRON line {lineno}: bad clause tag {kind!r}")
            term_props.setdefault(term, set()).add(prop)
    if not term_props:
        raise DataError(f"no properties in {path}")

    all_props = sorted(
        {p for props in term_props.values() for p in props},
        key=lambda p: (p.head_noun, p.event, p.other_noun, p.clause_type),
    )
    items = []
    for term in sorted(term_props):
        relevant = term_props[term]
        props = tuple(
            RelpronProperty(
                p.head_noun, p.event, p.other_noun, p.clause_type, p in relevant
            )
            for p in all_props
        )
        items.append(RelpronItem(term, props))
    return items
