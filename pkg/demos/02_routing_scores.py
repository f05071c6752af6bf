"""
How a task picks its weight
===========================

Every task is matched against every same-intent weight with

    S = I + alpha * sim(target) + beta * sim(modality)

where I is 1 for an intent match, the similarities are trigram cosines,
and the modality term is dropped entirely when the request has none.
The best candidate must clear a strict threshold or the task routes
nowhere.
"""

from medrouter import Intent, RouteQuery, RoutingParams, demo_registry, select_weight

registry, lexicon = demo_registry()
params = RoutingParams()
print(
    f"alpha={params.alpha} beta={params.beta} "
    f"threshold={params.threshold} (strict >)\n"
)


def show(query: RouteQuery) -> None:
    decision = select_weight(query, registry, params)
    print(f"query: intent={query.intent.value} target={query.target!r} modality={query.modality!r}")
    for cand in decision.ranked[:4]:
        b = cand.breakdown
        modality_part = "" if b.sim_modality is None else f" + {b.beta}*{b.sim_modality:.4f}"
        print(
            f"  {cand.weight_id:<28} S={b.total:.4f}"
            f"  ({b.intent_match} + {b.alpha}*{b.sim_target:.4f}{modality_part})"
        )
    if decision.selected:
        print(f"  -> selected {decision.selected}\n")
    else:
        print(f"  -> no weight ({decision.reason_if_none})\n")


# A full match scores 1 + 1.5 + 1.0 and wins outright.
show(RouteQuery(intent=Intent.CLASSIFICATION, target="pneumonia", modality="cxr"))

# Without a modality the ceiling drops to 2.5; note the missing term.
show(RouteQuery(intent=Intent.CLASSIFICATION, target="pneumonia", modality=None))

# Near-miss targets still route when the trigram overlap is high enough.
show(RouteQuery(intent=Intent.SEGMENTATION, target="optic cup", modality="color fundus"))

# A multiclass weight dilutes its joined target descriptor, so the
# binary covid weight outscores it; exact score ties would then break
# toward fewer classes and finally lexicographic id.
show(RouteQuery(intent=Intent.CLASSIFICATION, target="covid", modality="cxr"))

# A target with no lexical overlap cannot clear the threshold.
show(RouteQuery(intent=Intent.CLASSIFICATION, target="melanoma", modality="dermoscopy"))
