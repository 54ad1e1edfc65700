#pragma once

#include <string>
#include <vector>

#include "repconf/types.hpp"

namespace repconf::features {

// Annotates each interaction with its per-pair playcount, recency, and
// sequence index. Requires each pair's interactions to appear in
// nondecreasing timestamp order (the canonical ingest order satisfies this);
// violations are fatal. Output preserves input order.
std::vector<AnnotatedInteraction> annotate(const std::vector<Interaction>& ints);

// Keeps, per pair, the first interaction, the first interaction after each
// positive label, and every positive label that has at least one predecessor
// positive. Everything else is a repeated skip at an already-represented
// playcount level and is dropped.
std::vector<AnnotatedInteraction> select_first_after_le(
    const std::vector<AnnotatedInteraction>& ann);

// Drops pairs whose entire history is a single positive interaction.
std::vector<AnnotatedInteraction> exclude_single_le_pairs(
    const std::vector<AnnotatedInteraction>& ann);

// CSV dump: user,item,timestamp,label,playcount,recency_s with an empty
// recency field when absent.
void write_annotated(const std::string& path, const std::vector<AnnotatedInteraction>& ann);

}  // namespace repconf::features
