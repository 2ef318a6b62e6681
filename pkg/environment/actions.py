"""
Action text protocol: ``<think>...</think><answer>SMILES</answer>`` plus the ``[DONE]`` sentinel.
"""
import re
from dataclasses import dataclass
from typing import Optional

from .exceptions import NoAnswerTag

ANSWER_PATTERN = re.compile(r'<answer>(.*?)</answer>', re.DOTALL)
DONE_SENTINEL = '[DONE]'


@dataclass(frozen=True)
class ParsedAction:
    answer: Optional[str]
    done: bool


def extract_answer(text) -> str:
    """Contents of the last ``<answer>`` span, trimmed."""
    matches = ANSWER_PATTERN.findall(text or '')
    if not matches:
        raise NoAnswerTag('action text has no <answer>...</answer> span')
    return matches[-1].strip()


def signals_done(text) -> bool:
    return DONE_SENTINEL in (text or '')


def parse_action(text) -> ParsedAction:
    try:
        answer = extract_answer(text)
    except NoAnswerTag:
        answer = None
    return ParsedAction(answer=answer, done=signals_done(text))


def format_action(smiles=None, thought=None, done=False) -> str:
    parts = []
    if thought:
        parts.append(f'<think>{thought}</think>')
    if done:
        parts.append(DONE_SENTINEL)
    elif smiles is not None:
        parts.append(f'<answer>{smiles}</answer>')
    return ''.join(parts)
