"""
Macro causal effects by do-calculus search
==========================================

Interventions assign whole clusters. The searcher combines the three rules
with proxy substitution and probability manipulations until the query reads
off observed data, and each step carries a replayable certificate.
"""

from mcdmg import fixture_text, parse_graph, recover_effect, replay
from mcdmg.expressions import render

fig2b = parse_graph(fixture_text("fig2b"))
d2 = recover_effect(fig2b, {"CX"}, {"CY"})
print("query :", render(d2.query))
for i, s in enumerate(d2.steps, 1):
    print(f"step {i}: {s.rule:9s} -> {render(s.after)}")

# Fig. 3's joint is not recoverable, yet the effect still is: condition on
# the outcome's missingness status and adjust through CZ.
fig3 = parse_graph(fixture_text("fig3"))
d3 = recover_effect(fig3, {"CX"}, {"CY"})
print("\nfig3 result:", render(d3.result))

# Derivations are proof objects: replaying the fig2b derivation against
# fig3 fails at the step whose separation no longer holds.
result = replay(fig3, d2)
print("\nfig2b derivation replayed on fig3:", result.ok,
      f"(fails at step {result.failed_at}: {result.reason})")
