"""Dormand-Prince 5(4) coefficients.

The classic embedded pair of Dormand & Prince (1980) with the quartic
dense-output polynomial (Shampine's optimal-c6 interpolant, the same one
used by MATLAB's ode45 and scipy's RK45). The fifth-order solution is
propagated; the difference against the embedded fourth-order result gives
the local error estimate. Stage 7 is the FSAL derivative at the step end.

Constants are kept as plain tuples of floats: the compiled fast path
re-declares them as C doubles from the same rational expressions, which
guarantees bit-identical values.
"""

ORDER = 5
ERROR_ORDER = 4
N_STAGES = 6  # k7 = FSAL evaluation at (t + h, y_new)

C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0)

A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)

B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)

# Error weights over k1..k7 (5th-order minus embedded 4th-order result).
E = (
    -71 / 57600,
    0.0,
    71 / 16695,
    -71 / 1920,
    17253 / 339200,
    -22 / 525,
    1 / 40,
)

# Dense-output weights: rows k1..k7, columns theta^1..theta^4.
P = (
    (
        1.0,
        -8048581381 / 2820520608,
        8663915743 / 2820520608,
        -12715105075 / 11282082432,
    ),
    (0.0, 0.0, 0.0, 0.0),
    (
        0.0,
        131558114200 / 32700410799,
        -68118460800 / 10900136933,
        87487479700 / 32700410799,
    ),
    (
        0.0,
        -1754552775 / 470086768,
        14199869525 / 1410260304,
        -10690763975 / 1880347072,
    ),
    (
        0.0,
        127303824393 / 49829197408,
        -318862633887 / 49829197408,
        701980252875 / 199316789632,
    ),
    (0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844),
    (0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423),
)
