#include "sibfix/fix_ingredients.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "sibfix/lexer.hpp"
#include "sibfix/text_similarity.hpp"

namespace sibfix {

namespace {

struct Reference {
  std::string name;
  DeclarationKind kind;
  std::string receiver;  // empty for unqualified references
};

std::vector<Reference> references_on(std::string_view text) {
  const std::string masked = mask_source(text);
  const auto tokens = lex(masked);
  std::vector<Reference> refs;
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    const auto& t = tokens[j];
    if (t.kind != TokenKind::Identifier || is_keyword(t.text)) continue;
    const bool call = j + 1 < tokens.size() && tokens[j + 1].text == "(";
    const bool qualified = j > 0 && (tokens[j - 1].text == "." || tokens[j - 1].text == "->");
    if (!call && !qualified) continue;
    if (call && j > 0 && tokens[j - 1].text == "new") continue;  // constructor
    Reference r{std::string(t.text), call ? DeclarationKind::Method : DeclarationKind::Field, {}};
    if (qualified && j >= 2 && tokens[j - 2].kind == TokenKind::Identifier) {
      r.receiver = std::string(tokens[j - 2].text);
    }
    const bool dup = std::any_of(refs.begin(), refs.end(), [&](const Reference& o) {
      return o.name == r.name && o.kind == r.kind && o.receiver == r.receiver;
    });
    if (!dup) refs.push_back(std::move(r));
  }
  return refs;
}

// Declared type of `variable` in `text`: the identifier immediately
// preceding a declaring occurrence, skipping generic arguments and array
// brackets.
std::string declared_type(std::string_view text, std::string_view variable) {
  const std::string masked = mask_source(text);
  const auto tokens = lex(masked);
  for (std::size_t j = 1; j < tokens.size(); ++j) {
    if (tokens[j].text != variable || tokens[j].kind != TokenKind::Identifier) continue;
    const std::string_view next = j + 1 < tokens.size() ? tokens[j + 1].text : ";";
    if (next != "=" && next != ";" && next != "," && next != ")" && next != ":") continue;
    std::size_t k = j - 1;
    int angle = 0;
    while (true) {
      const auto p = tokens[k].text;
      if (p == ">") ++angle;
      else if (p == ">>") angle += 2;
      else if (p == "<") --angle;
      else if (angle == 0 && p != "]" && p != "[") break;
      if (k == 0) break;
      --k;
    }
    if (tokens[k].kind == TokenKind::Identifier && !is_keyword(tokens[k].text)) {
      return std::string(tokens[k].text);
    }
  }
  return {};
}

using ClassKey = std::pair<std::string, std::string>;  // (file, class name)

}  // namespace

std::vector<FixIngredient> extract_fix_ingredients(std::span<const MethodGroup> groups,
                                                   const SourceIndex& index, std::size_t n,
                                                   std::vector<std::string>* log) {
  std::vector<const Declaration*> all_decls;
  for (const auto& f : index.files()) {
    for (const auto& d : f.declarations) all_decls.push_back(&d);
  }
  auto classes_declaring = [&](const std::string& name, DeclarationKind kind) {
    std::set<ClassKey> out;
    for (const auto* d : all_decls) {
      if (d->name == name && d->kind == kind) out.insert({d->file, d->class_name});
    }
    return out;
  };
  auto to_ingredient = [](const Declaration& d, double score, bool referenced) {
    return FixIngredient{d.kind == DeclarationKind::Method ? IngredientKind::MethodDeclaration
                                                           : IngredientKind::FieldDeclaration,
                         d.signature, d.class_name, d.file, d.line, score, referenced};
  };

  std::vector<FixIngredient> result;
  std::set<std::tuple<std::string, int, std::string>> emitted;  // (file, line, signature)
  auto emit = [&](FixIngredient ing) {
    if (emitted.insert({ing.source_file, ing.line, ing.signature}).second) {
      result.push_back(std::move(ing));
    }
  };

  for (const auto& group : groups) {
    const auto& file = index.require_file(group.file);
    const std::string method_text =
        group.method ? file.content.substr(group.method->begin, group.method->end - group.method->begin)
                     : std::string{};
    const std::string own_class =
        group.method && group.method->class_name ? *group.method->class_name : std::string{};

    for (int line : group.sibling_lines) {
      const Statement* stmt = index.statement_at(group.file, line);
      if (!stmt) continue;

      // (1)-(2): referenced members and the classes that declare them.
      std::vector<const Declaration*> referenced;
      std::set<ClassKey> related;
      for (const auto& ref : references_on(stmt->text)) {
        std::set<ClassKey> receiver_classes;
        if (ref.receiver.empty() || ref.receiver == "this") {
          if (!own_class.empty()) receiver_classes.insert({group.file, own_class});
        } else {
          std::string type = declared_type(method_text, ref.receiver);
          if (type.empty()) {
            for (const auto& d : file.declarations) {
              if (d.kind == DeclarationKind::Field && d.name == ref.receiver) {
                type = declared_type(d.signature, ref.receiver);
                if (!type.empty()) break;
              }
            }
          }
          if (type.empty()) type = ref.receiver;  // static access through a class name
          for (const auto* c : index.classes_named(type)) receiver_classes.insert({c->file, c->name});
        }
        std::vector<const Declaration*> found;
        for (const auto* d : all_decls) {
          if (d->name == ref.name && d->kind == ref.kind &&
              receiver_classes.contains({d->file, d->class_name})) {
            found.push_back(d);
          }
        }
        if (found.empty()) {
          for (const auto& key : classes_declaring(ref.name, ref.kind)) {
            for (const auto* d : all_decls) {
              if (d->name == ref.name && d->kind == ref.kind && d->file == key.first &&
                  d->class_name == key.second) {
                found.push_back(d);
              }
            }
          }
        }
        if (found.empty()) {
          if (log) log->push_back(group.file + ":" + std::to_string(line) + ": unresolved reference " + ref.name);
          continue;
        }
        for (const auto* d : found) {
          if (std::find(referenced.begin(), referenced.end(), d) == referenced.end()) {
            referenced.push_back(d);
          }
          related.insert({d->file, d->class_name});
        }
      }

      // (3): every declaration of the related classes.
      std::vector<const Declaration*> pool;
      for (const auto* d : all_decls) {
        if (related.contains({d->file, d->class_name})) pool.push_back(d);
      }

      // (4): rank by TF-IDF cosine against the sibling line.
      std::vector<std::vector<std::string>> docs;
      docs.push_back(tokenize(stmt->text));
      for (const auto* d : pool) docs.push_back(tokenize(d->signature));
      const TfIdfModel model(docs);
      auto score_of = [&](const Declaration* d) {
        const auto it = std::find(pool.begin(), pool.end(), d);
        return model.cosine(0, static_cast<std::size_t>(it - pool.begin()) + 1);
      };

      for (const auto* d : referenced) emit(to_ingredient(*d, score_of(d), true));

      std::vector<std::pair<double, const Declaration*>> ranked;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        if (std::find(referenced.begin(), referenced.end(), pool[i]) != referenced.end()) continue;
        ranked.emplace_back(model.cosine(0, i + 1), pool[i]);
      }
      std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        if (a.second->file != b.second->file) return a.second->file < b.second->file;
        return a.second->line < b.second->line;
      });
      if (ranked.size() > n) ranked.resize(n);
      for (const auto& [score, d] : ranked) emit(to_ingredient(*d, score, false));
    }
  }
  return result;
}

}  // namespace sibfix
