#pragma once

#include <optional>
#include <string_view>

namespace calmath {

/// Where a probability p_M comes from. Verbalized probability has two surface
/// forms (a percentage or one of five words).
enum class ConfidenceKind { VerbalNumber, VerbalWord, AnswerLogit, IndirectLogit };

enum class Decoding { Greedy, ExpectedValue };

std::string_view kind_name(ConfidenceKind k);
std::optional<ConfidenceKind> parse_kind(std::string_view name);
std::string_view decoding_name(Decoding d);
std::optional<Decoding> parse_decoding(std::string_view name);

}  // namespace calmath
