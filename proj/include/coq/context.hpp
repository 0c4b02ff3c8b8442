#pragma once

#include <string>

#include "coq/config.hpp"
#include "coq/llm.hpp"
#include "coq/sandbox.hpp"
#include "coq/table.hpp"

namespace coq {

// Everything an agent needs for one question. Shared by all sub-question
// pipelines of that question.
struct AgentContext {
  const Table& table;
  const NLSchema& schema;
  std::string schema_text;  // render_schema(schema)
  Gateway& gateway;
  const Sandbox& sandbox;
  const RunConfig& config;

  AgentContext(const Table& t, const NLSchema& s, Gateway& g, const Sandbox& sb, const RunConfig& c)
      : table(t), schema(s), schema_text(render_schema(s)), gateway(g), sandbox(sb), config(c) {}

  ExecResult execute(const std::string& sql) const {
    return sandbox.execute(sql, config.row_limit, config.query_timeout);
  }
};

}  // namespace coq
