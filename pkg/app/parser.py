"""Reading and printing process terms.

Grammar (EBNF, whitespace is insignificant)::

    process  = prefixed ;
    prefixed = action , [ "." , tail ] ;
    tail     = prefixed | "(" , parallel , ")" ;
    parallel = prefixed , { "||" , prefixed } ;
    action   = ? [A-Za-z_][A-Za-z0-9_]* ? ;

With `allow_forest` a top-level `a || b.c` is hung under a synthetic
`#root`. Error positions are 0-based offsets into the input.
"""
import re
from typing import Iterator, Union
from app.exceptions import ProcessSyntaxError
from app.models import ROOT_LABEL, SyntaxTree

_TOKEN = re.compile(
    r'\s*(?:(?P<action>[A-Za-z_][A-Za-z0-9_]*)|(?P<par>\|\|)|(?P<op>[.()]))')
_END = 'end'


def _tokenize(text: str) -> Iterator[tuple[str, str, int]]:
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            return
        match = _TOKEN.match(text, pos)
        if match is None:
            raise ProcessSyntaxError(f'unexpected character {text[pos]!r}', pos)
        start = match.start(match.lastgroup)
        if match.lastgroup == 'action':
            yield 'action', match.group('action'), start
        elif match.lastgroup == 'par':
            yield '||', '||', start
        else:
            yield match.group('op'), match.group('op'), start
        pos = match.end()


def _describe(token: tuple[str, str, int]) -> str:
    if token[0] == _END:
        return 'end of input'
    return repr(token[1])


class _Parser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.tokens = list(_tokenize(text))
        self.index = 0
        self.labels: list[str] = []
        self.children: list[list[int]] = []

    def peek(self) -> tuple[str, str, int]:
        if self.index < len(self.tokens):
            return self.tokens[self.index]
        return _END, '', len(self.text)

    def expect(self, kind: str, what: str) -> tuple[str, str, int]:
        token = self.peek()
        if token[0] != kind:
            raise ProcessSyntaxError(
                f'expected {what}, found {_describe(token)}', token[2])
        self.index += 1
        return token

    def new_node(self, label: str, parent: int) -> int:
        self.labels.append(label)
        self.children.append([])
        node = len(self.labels)
        if parent:
            self.children[parent - 1].append(node)
        return node

    def prefixed(self, parent: int) -> None:
        # parents of the open '(' groups, innermost last
        groups: list[int] = []
        while True:
            token = self.expect('action', 'an action name')
            node = self.new_node(token[1], parent)
            if self.peek()[0] == '.':
                self.index += 1
                if self.peek()[0] == '(':
                    self.index += 1
                    groups.append(node)
                parent = node
                continue
            while groups:
                if self.peek()[0] == '||':
                    self.index += 1
                    parent = groups[-1]
                    break
                self.expect(')', '")"')
                groups.pop()
            else:
                return

    def parallel(self, parent: int) -> None:
        self.prefixed(parent)
        while self.peek()[0] == '||':
            self.index += 1
            self.prefixed(parent)

    def finish(self) -> None:
        token = self.peek()
        if token[0] == '||':
            raise ProcessSyntaxError(
                'a top-level parallel composition is not a prefixed process',
                token[2])
        if token[0] != _END:
            raise ProcessSyntaxError(
                f'unexpected {_describe(token)} after the process', token[2])

    def tree(self, drop_root: bool = False) -> SyntaxTree:
        labels, children = self.labels, self.children
        if drop_root:
            labels = labels[1:]
            children = [[c - 1 for c in kids] for kids in children[1:]]
        return SyntaxTree(tuple(labels), tuple(tuple(c) for c in children))


def parse_process(text: str, allow_forest: bool = False) -> SyntaxTree:
    if not text or not text.strip():
        raise ProcessSyntaxError('empty process term', 0)
    parser = _Parser(text)
    if not allow_forest:
        parser.prefixed(0)
        parser.finish()
        return parser.tree()
    parser.new_node(ROOT_LABEL, 0)
    parser.parallel(1)
    parser.finish()
    return parser.tree(drop_root=len(parser.children[0]) == 1)


def to_term(tree: SyntaxTree) -> str:
    """Print `tree` in the grammar above; parse_process reads it back."""
    out: list[str] = []
    stack: list[tuple[bool, Union[int, str]]] = []
    if tree.label(tree.root) == ROOT_LABEL and tree.size > 1:
        kids = tree.children(tree.root)
        for k in range(len(kids) - 1, -1, -1):
            stack.append((True, kids[k]))
            if k:
                stack.append((False, ' || '))
    else:
        stack.append((True, tree.root))
    while stack:
        is_node, item = stack.pop()
        if not is_node:
            out.append(str(item))
            continue
        node = int(item)
        out.append(tree.label(node))
        kids = tree.children(node)
        if len(kids) == 1:
            out.append('.')
            stack.append((True, kids[0]))
        elif kids:
            out.append('.(')
            stack.append((False, ')'))
            for k in range(len(kids) - 1, -1, -1):
                stack.append((True, kids[k]))
                if k:
                    stack.append((False, ' || '))
    return ''.join(out)
