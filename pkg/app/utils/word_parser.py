"""
群語パーサ
Group Word Parser

"(1,2)(3,4)∘μ1∘μ3" や "(1,2)(3,4)*mu1*mu3" 形式の文字列を GroupWord に変換する。
名前付き生成元（"T", "pi2^4", "(s0*s1)^3"）は namespace から解決する。
"""
import sys
from pathlib import Path

# プロジェクトルートをパスに追加
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root))

import re
from typing import List, Mapping, Optional, Tuple

from app.models.verification import UnknownLabel, VerificationError
from app.services.quiver import GroupWord, Inv, Mut, Perm, compose, power

_TOKEN = re.compile(r"\s*(?:(?P<num>-?\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_']*)|(?P<mu>μ)|(?P<inv>ς)|(?P<op>[()^,*∘]))")
_MU_NAME = re.compile(r"mu(\d+)$")


def _tokenize(text: str) -> List[Tuple[str, str]]:
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if not match or match.end() == pos:
            raise VerificationError(f"unexpected character {text[pos]!r} in word {text!r}")
        kind = match.lastgroup
        tokens.append((kind, match.group(kind)))
        pos = match.end()
    return tokens


class _WordParser:
    """再帰下降パーサ: word := factor (sep factor)* ; factor := primary ('^' int)?"""

    def __init__(self, text: str, namespace: Mapping[str, GroupWord]):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.namespace = namespace

    def peek(self, offset: int = 0) -> Optional[Tuple[str, str]]:
        index = self.pos + offset
        return self.tokens[index] if index < len(self.tokens) else None

    def take(self) -> Tuple[str, str]:
        token = self.peek()
        if token is None:
            raise VerificationError(f"unexpected end of word {self.text!r}")
        self.pos += 1
        return token

    def expect(self, value: str) -> None:
        kind, got = self.take()
        if got != value:
            raise VerificationError(f"expected {value!r} but found {got!r} in word {self.text!r}")

    def parse(self) -> GroupWord:
        word = self.word()
        if self.peek() is not None:
            raise VerificationError(f"trailing input {self.peek()[1]!r} in word {self.text!r}")
        return word

    def word(self) -> GroupWord:
        result = self.factor()
        while self.peek() and self.peek()[1] in ("*", "∘"):
            self.take()
            result = compose(result, self.factor())
        return result

    def factor(self) -> GroupWord:
        base = self.primary()
        if self.peek() and self.peek()[1] == "^":
            self.take()
            kind, value = self.take()
            if kind != "num":
                raise VerificationError(f"exponent must be an integer in word {self.text!r}")
            return power(base, int(value))
        return base

    def _at_cycle(self) -> bool:
        first, second = self.peek(), self.peek(1)
        return bool(first and second and first[1] == "(" and second[0] == "num")

    def primary(self) -> GroupWord:
        token = self.peek()
        if token is None:
            raise VerificationError(f"unexpected end of word {self.text!r}")
        kind, value = token
        if self._at_cycle():
            cycles = []
            while self._at_cycle():
                cycles.append(self.cycle())
            return GroupWord((Perm.from_cycles(cycles),))
        if value == "(":
            self.take()
            inner = self.word()
            self.expect(")")
            return inner
        if kind == "mu":
            self.take()
            k, vertex = self.take()
            if k != "num":
                raise VerificationError(f"μ must be followed by a vertex in word {self.text!r}")
            return GroupWord((Mut(int(vertex)),))
        if kind == "inv":
            self.take()
            return GroupWord((Inv(),))
        if kind == "name":
            self.take()
            if value == "e":
                return GroupWord.identity()
            if value == "inv":
                return GroupWord((Inv(),))
            mu = _MU_NAME.match(value)
            if mu:
                return GroupWord((Mut(int(mu.group(1))),))
            if value not in self.namespace:
                raise UnknownLabel(f"unknown generator {value!r} in word {self.text!r}")
            return self.namespace[value]
        raise VerificationError(f"unexpected token {value!r} in word {self.text!r}")

    def cycle(self) -> List[int]:
        self.expect("(")
        points = []
        while True:
            kind, value = self.take()
            if kind != "num":
                raise VerificationError(f"cycle entries must be integers in word {self.text!r}")
            points.append(int(value))
            kind, value = self.take()
            if value == ")":
                return points
            if value != ",":
                raise VerificationError(f"malformed cycle in word {self.text!r}")


def parse_word(text: str, namespace: Optional[Mapping[str, GroupWord]] = None) -> GroupWord:
    """
    群語の文字列を解析

    Args:
        text: 例 "(1,2)(3,4)∘μ1∘μ3", "pi2*T*pi2", "(s0*s1)^3", "e"
        namespace: 名前付き生成元の辞書

    Returns:
        GroupWord: 合成順の原子列
    """
    if not text or not text.strip():
        raise VerificationError("empty group word")
    return _WordParser(text, namespace or {}).parse()
