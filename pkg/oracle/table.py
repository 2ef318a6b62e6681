"""
Tabulated oracles replayed from ``SMILES<TAB>score`` files.
"""
import logging
import math
from pathlib import Path

from chemgraph.canonical import canonicalize
from chemgraph.exceptions import ChemGraphError
from chemgraph.smiles import parse_smiles

from .exceptions import MissingKey, TableParseError

logger = logging.getLogger(__name__)


class TableOracle:
    """Lookup oracle keyed by canonical SMILES."""

    def __init__(self, scores, name='table', source=None):
        self.scores = dict(scores)
        self.name = name
        self.source = source

    def __len__(self):
        return len(self.scores)

    def __contains__(self, graph):
        return canonicalize(graph) in self.scores

    def __call__(self, graph):
        key = canonicalize(graph)
        try:
            return self.scores[key]
        except KeyError:
            raise MissingKey(f'{self.name}: no score for {key}')

    def __repr__(self):
        return f'TableOracle(name={self.name!r}, entries={len(self.scores)})'


def load_table_oracle(path, name=None) -> TableOracle:
    path = Path(path)
    scores = {}
    with open(path, encoding='utf-8', newline='') as handle:
        for line_number, raw in enumerate(handle, start=1):
            line = raw.rstrip('\n')
            if not line.strip():
                continue
            fields = line.split('\t')
            if len(fields) != 2:
                raise TableParseError(line_number, 'expected "SMILES<TAB>score"')
            smiles, text = fields
            try:
                key = canonicalize(parse_smiles(smiles))
            except ChemGraphError as exc:
                raise TableParseError(line_number, f'invalid SMILES {smiles!r}: {exc}')
            try:
                score = float(text)
            except ValueError:
                raise TableParseError(line_number, f'invalid score {text!r}')
            if not math.isfinite(score):
                raise TableParseError(line_number, f'non-finite score {text!r}')
            if key in scores and scores[key] != score:
                logger.warning(f'{path.name}:{line_number}: {key} listed twice, keeping the later score')
            scores[key] = score
    logger.info(f'Loaded {len(scores)} scores from {path}')
    return TableOracle(scores, name=name or path.stem, source=str(path))
