"""Straight-line evaluation of the K=3, beta=3 MetaMax revision example.

Query a = [3, 2, 1]. The class-1 model has rho = 0, kappa = 1, lambda = 2 and
translation is disabled. Ranks (descending): 0, 1, 2.
  rank 1 -> class 0 is the argmax: skipped, m_0 = 1
  rank 2 -> class 1, weight (3 - 2) / 3, survival exp(-(2 / 2)^1)
  rank 3 -> class 2, weight 0, m_2 = 1
"""
import math

a = [3.0, 2.0, 1.0]
m0 = 1.0
m1 = 1.0 - (1.0 / 3.0) * math.exp(-((2.0 / 2.0) ** 1.0))
m2 = 1.0 - 0.0
revised = [a[0] * m0, a[1] * m1, a[2] * m2]
unknown = (a[0] - revised[0]) + (a[1] - revised[1]) + (a[2] - revised[2])
logits = revised + [unknown]
top = max(logits)
exps = [math.exp(v - top) for v in logits]
total = sum(exps)
probs = [e / total for e in exps]

print("m", [m0, m1, m2])
print("revised", revised)
print("unknown", unknown)
print("probabilities", probs)
