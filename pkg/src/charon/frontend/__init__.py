"""CharonLang front end: lexer, parser, pretty-printer and AST."""

from .ast import ast_node_count
from .lexer import Token, tokenize
from .parser import parse, parse_source
from .printer import print_program

__all__ = ["Token", "tokenize", "parse", "parse_source", "print_program", "ast_node_count"]
