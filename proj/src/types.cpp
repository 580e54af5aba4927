#include "empathy/types.hpp"

namespace empathy {

std::string_view to_string(Label label) {
  switch (label) {
    case Label::Empathy: return "Empathy";
    case Label::Neutral: return "Neutral";
    case Label::Anger: return "Anger";
    case Label::Frustration: return "Frustration";
  }
  return "Neutral";
}

std::string_view to_string(Channel channel) {
  return channel == Channel::Agent ? "agent" : "customer";
}

std::optional<Label> parse_label(std::string_view text) {
  if (text == "Empathy") return Label::Empathy;
  if (text == "Neutral") return Label::Neutral;
  if (text == "Anger") return Label::Anger;
  if (text == "Frustration") return Label::Frustration;
  return std::nullopt;
}

std::optional<Channel> parse_channel(std::string_view text) {
  if (text == "agent") return Channel::Agent;
  if (text == "customer") return Channel::Customer;
  return std::nullopt;
}

bool label_allowed_on(Label label, Channel channel) {
  switch (label) {
    case Label::Empathy: return channel == Channel::Agent;
    case Label::Anger:
    case Label::Frustration: return channel == Channel::Customer;
    case Label::Neutral: return true;
  }
  return false;
}

}  // namespace empathy
