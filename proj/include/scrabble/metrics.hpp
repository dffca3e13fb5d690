#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace scrabble {

// Levenshtein distance with unit insert, delete and substitute costs.
int edit_distance(std::string_view a, std::string_view b);

// Fraction of positions where prediction != truth. Throws LengthMismatch
// for unequal or empty lists.
double wer(const std::vector<std::string>& predictions, const std::vector<std::string>& truths);

// Mean over samples of edit_distance / len(truth). Throws EmptyTruth when
// a truth is empty and LengthMismatch as wer does.
double ned(const std::vector<std::string>& predictions, const std::vector<std::string>& truths);

}  // namespace scrabble
