#include "scrabble/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "scrabble/errors.hpp"

namespace scrabble {

int edit_distance(std::string_view a, std::string_view b) {
  std::vector<int> row(b.size() + 1);
  std::iota(row.begin(), row.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    int diag = row[0];
    row[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

namespace {

void check_lengths(const std::vector<std::string>& p, const std::vector<std::string>& t) {
  if (p.size() != t.size()) {
    throw LengthMismatch(std::to_string(p.size()) + " predictions for " + std::to_string(t.size()) +
                         " truths");
  }
  if (p.empty()) throw LengthMismatch("no samples to score");
}

}  // namespace

double wer(const std::vector<std::string>& predictions, const std::vector<std::string>& truths) {
  check_lengths(predictions, truths);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) wrong += predictions[i] != truths[i];
  return static_cast<double>(wrong) / static_cast<double>(truths.size());
}

double ned(const std::vector<std::string>& predictions, const std::vector<std::string>& truths) {
  check_lengths(predictions, truths);
  double sum = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (truths[i].empty()) throw EmptyTruth("truth " + std::to_string(i) + " is empty");
    sum += static_cast<double>(edit_distance(predictions[i], truths[i])) /
           static_cast<double>(truths[i].size());
  }
  return sum / static_cast<double>(truths.size());
}

}  // namespace scrabble
