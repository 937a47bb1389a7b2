"""Toolkit for existential formulas over the language of rings.

Subpackages: formula AST and grammar (``formulas``), exact field arithmetic
and profiles (``fields``), rewriting passes with quantifier accounting
(``passes``), one-quantifier power collapses in characteristic p
(``collapse``), model semantics and pairings (``semantics``), the
formula/variety bridge (``geometry``), the equivalence harness
(``equivalence``), and the ``erank`` CLI (``cli``).
"""

__version__ = "0.1.0"
