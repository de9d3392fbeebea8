#pragma once

#include <string>
#include <vector>

#include "curator/error.hpp"

namespace curator::dsl {

enum class TokenType { Ident, String, Int, Float, ParamRef, Arrow, Punct, End };

struct Token {
  TokenType type = TokenType::End;
  std::string text;
  SourceLoc loc;
};

class Lexer {
 public:
  explicit Lexer(const std::string& source);
  Token next();

 private:
  [[noreturn]] void fail(const std::string& message) const;
  char peek(size_t ahead = 0) const;
  char advance();
  void skip_trivia();
  Token lex_number(Token t);
  Token lex_string(Token t);

  const std::string& src_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

std::vector<Token> tokenize(const std::string& source);

}  // namespace curator::dsl
