#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace empathy {

/// Input that violates a documented contract (bad file, bad config, bad argument).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure while a pipeline stage is running.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& cause)
      : std::runtime_error(stage + ": " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

enum class Label { Empathy, Neutral, Anger, Frustration };
enum class Channel { Agent, Customer };

std::string_view to_string(Label label);
std::string_view to_string(Channel channel);
std::optional<Label> parse_label(std::string_view text);
std::optional<Channel> parse_channel(std::string_view text);

/// Whether `label` may appear on `channel`. Empathy is agent-only, Anger and
/// Frustration are customer-only, Neutral is allowed on both.
bool label_allowed_on(Label label, Channel channel);

/// Half-open time interval in seconds.
struct Span {
  double start_s = 0.0;
  double end_s = 0.0;

  double length() const { return end_s - start_s; }
  bool operator==(const Span&) const = default;
};

/// A labeled time span on one channel of a conversation.
struct Segment {
  Channel channel = Channel::Agent;
  double start_s = 0.0;
  double end_s = 0.0;
  Label label = Label::Neutral;

  double length() const { return end_s - start_s; }
  Span span() const { return {start_s, end_s}; }
  bool operator==(const Segment&) const = default;
};

}  // namespace empathy
