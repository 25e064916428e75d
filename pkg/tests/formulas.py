"""Shared formula corpus used by several test modules."""

THREE_COLORING = (
    "exists X1, X2, X3 ((forall x (x in X1 | x in X2 | x in X3)) & "
    "bigand i in 1..3 (forall x, y (x notin X{i} | y notin X{i} | !edge(x, y))))"
)

CORPUS = [
    "exists X1 forall x (x in X1)",
    THREE_COLORING,
    "forall x (x in X1)",
    "exists x exists y edge(x, y)",
    "independent(X1) & dominating(X1)",
    "partition(X1, X2) & independent(X1) & independent(X2)",
    "connected(X1) & dominating(X1)",
    "forall x in X1 (exists y in X2 edge(x, y))",
    "exists x (x in X1 & label(L_V, x)) -> !covers(X1)",
    "(exists z (z in X1) <-> true) | false",
    "setforall Y (subset(Y, X1) -> exists x (x in Y) | !exists x (x in Y))",
    "card_eq(X1, 2) & disjoint(X1, X2)",
    "forall x, y (x in X1 & y in X1 -> x = y | edge(x, y))",
    "exists X (exists x (x in X & x in X1) | true)",
]

# pure formulas cheap enough to evaluate many times on graphs with n <= 12
CHEAP = [
    "forall x (x in X1)",
    "independent(X1) & dominating(X1)",
    "partition(X1, X2) & independent(X1) & independent(X2)",
    "connected(X1) & dominating(X1)",
    "forall x in X1 (exists y in X2 edge(x, y))",
    "exists x (x in X1 & !exists y (y in X2 & edge(x, y)))",
    "card_eq(X1, 2) | covers(X2)",
    "forall x, y (x in X1 & y in X1 -> x = y | edge(x, y))",
]
