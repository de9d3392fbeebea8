#include "curator/dsl_lexer.hpp"

#include <cctype>

namespace curator::dsl {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

Lexer::Lexer(const std::string& source) : src_(source) {}

[[noreturn]] void Lexer::fail(const std::string& message) const {
  raise_at(ErrorCode::ParseError, {line_, col_}, message);
}

char Lexer::peek(size_t ahead) const {
  return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
}

char Lexer::advance() {
  char c = src_[pos_++];
  if (c == '\n') {
    ++line_;
    col_ = 1;
  } else {
    ++col_;
  }
  return c;
}

void Lexer::skip_trivia() {
  while (pos_ < src_.size()) {
    char c = peek();
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance();
    } else if (c == '#') {
      while (pos_ < src_.size() && peek() != '\n') advance();
    } else {
      break;
    }
  }
}

Token Lexer::next() {
  skip_trivia();
  Token t;
  t.loc = {line_, col_};
  if (pos_ >= src_.size()) {
    t.type = TokenType::End;
    t.text = "end of input";
    return t;
  }
  char c = peek();

  if (ident_start(c)) {
    std::string text;
    while (pos_ < src_.size() && ident_char(peek())) text.push_back(advance());
    t.type = TokenType::Ident;
    t.text = std::move(text);
    return t;
  }

  if (std::isdigit(static_cast<unsigned char>(c)) ||
      (c == '-' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
    return lex_number(t);
  }

  if (c == '"') return lex_string(t);

  if (c == '$' && peek(1) == '{') {
    advance();
    advance();
    std::string name;
    while (pos_ < src_.size() && ident_char(peek())) name.push_back(advance());
    if (name.empty()) fail("expected parameter name after \"${\"");
    if (peek() != '}') fail("expected \"}\" after parameter name");
    advance();
    t.type = TokenType::ParamRef;
    t.text = std::move(name);
    return t;
  }

  if (c == '-' && peek(1) == '>') {
    advance();
    advance();
    t.type = TokenType::Arrow;
    t.text = "->";
    return t;
  }

  switch (c) {
    case '{': case '}': case '(': case ')': case '[': case ']':
    case ':': case ';': case ',': case '=':
      advance();
      t.type = TokenType::Punct;
      t.text = std::string(1, c);
      return t;
    default:
      fail(std::string("unexpected character \"") + c + "\"");
  }
}

Token Lexer::lex_number(Token t) {
  std::string text;
  bool is_float = false;
  if (peek() == '-') text.push_back(advance());
  while (std::isdigit(static_cast<unsigned char>(peek()))) text.push_back(advance());
  if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
    is_float = true;
    text.push_back(advance());
    while (std::isdigit(static_cast<unsigned char>(peek()))) text.push_back(advance());
  }
  if (peek() == 'e' || peek() == 'E') {
    char sign = peek(1);
    if (std::isdigit(static_cast<unsigned char>(sign)) ||
        ((sign == '+' || sign == '-') && std::isdigit(static_cast<unsigned char>(peek(2))))) {
      is_float = true;
      text.push_back(advance());
      if (peek() == '+' || peek() == '-') text.push_back(advance());
      while (std::isdigit(static_cast<unsigned char>(peek()))) text.push_back(advance());
    }
  }
  t.type = is_float ? TokenType::Float : TokenType::Int;
  t.text = std::move(text);
  return t;
}

Token Lexer::lex_string(Token t) {
  // """...""" is raw and may span lines; "..." takes the usual escapes
  if (peek(1) == '"' && peek(2) == '"') {
    advance();
    advance();
    advance();
    std::string text;
    while (true) {
      if (pos_ >= src_.size()) fail("unterminated triple-quoted string");
      if (peek() == '"' && peek(1) == '"' && peek(2) == '"') {
        advance();
        advance();
        advance();
        break;
      }
      text.push_back(advance());
    }
    t.type = TokenType::String;
    t.text = std::move(text);
    return t;
  }

  advance();  // opening quote
  std::string text;
  while (true) {
    if (pos_ >= src_.size()) fail("unterminated string");
    char c = advance();
    if (c == '"') break;
    if (c == '\n') fail("newline in string literal (use triple quotes)");
    if (c == '\\') {
      if (pos_ >= src_.size()) fail("unterminated escape");
      char e = advance();
      switch (e) {
        case 'n': text.push_back('\n'); break;
        case 't': text.push_back('\t'); break;
        case 'r': text.push_back('\r'); break;
        case '"': text.push_back('"'); break;
        case '\\': text.push_back('\\'); break;
        default: fail(std::string("unknown escape \"\\") + e + "\"");
      }
    } else {
      text.push_back(c);
    }
  }
  t.type = TokenType::String;
  t.text = std::move(text);
  return t;
}

std::vector<Token> tokenize(const std::string& source) {
  Lexer lexer(source);
  std::vector<Token> tokens;
  while (true) {
    Token t = lexer.next();
    bool end = t.type == TokenType::End;
    tokens.push_back(std::move(t));
    if (end) break;
  }
  return tokens;
}

}  // namespace curator::dsl
