from .fst import (EPS, Arc, Fst, NoParse, SymbolTable, closure, compose, concat, connect, cross,
                  linear_acceptor, optional, paths, rm_epsilon, shortest_path, union)
from .grammar import FST_CATEGORIES, Transduction, build_grammar, symbols, transduce
