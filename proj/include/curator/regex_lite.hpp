#pragma once

#include <bitset>
#include <string>
#include <vector>

namespace curator::rx {

// Small NFA regex engine: character classes, alternation, repetition and
// anchors over bytes; no backreferences, no captures. Matching is a Thompson
// simulation, linear in input length for a fixed pattern.
class Regex {
 public:
  // throws Error(InvalidArgument) on a malformed pattern
  static Regex compile(const std::string& pattern);

  bool full_match(const std::string& s) const;
  bool search(const std::string& s) const;

  // leftmost, longest, non-overlapping matches
  std::vector<std::string> find_all(const std::string& s) const;

 private:
  struct Inst {
    enum class Op { Byte, Class, Any, Split, Jmp, AssertStart, AssertEnd, Match };
    Op op = Op::Match;
    unsigned char byte = 0;
    int cls = -1;  // index into classes_
    int x = -1;    // primary target
    int y = -1;    // Split alternative
  };

  Regex() = default;

  // longest accept length from `start` (-1 when none); `end_only` restricts
  // accepts to those consuming the whole string
  int run(const std::string& s, size_t start, bool end_only) const;

  std::vector<Inst> prog_;
  std::vector<std::bitset<256>> classes_;

  friend class Compiler;
};

}  // namespace curator::rx
