#include "curator/executor.hpp"

#include <chrono>
#include <variant>

#include "curator/value_json.hpp"

namespace curator {

using nlohmann::ordered_json;

ordered_json RunReport::to_json() const {
  ordered_json nodes_json = ordered_json::array();
  for (const NodeStats& n : nodes) {
    nodes_json.push_back({{"node", n.node},
                          {"records", n.records},
                          {"errors", n.errors},
                          {"wall_ms", n.wall_ms},
                          {"ledger_delta", n.ledger_delta.to_json()}});
  }
  ordered_json errors_json = ordered_json::array();
  for (const RunError& e : errors) {
    errors_json.push_back({{"node", e.node}, {"record", e.record}, {"message", e.message}});
  }
  return {{"run_id", run_id},
          {"backend", backend_kind},
          {"seed", seed},
          {"nodes", std::move(nodes_json)},
          {"errors", std::move(errors_json)},
          {"ledger_initial", ledger_initial.to_json()},
          {"ledger_final", ledger_final.to_json()}};
}

Table reassemble_rows(const std::vector<Value>& rows) {
  // wrap non-record results so every row is a record
  std::vector<Value> records;
  records.reserve(rows.size());
  for (const Value& row : rows) {
    if (row.kind() == ValueKind::Record) {
      records.push_back(row);
    } else {
      records.push_back(Value::record({{"value", row}}));
    }
  }

  // field names in first-seen order
  std::vector<std::string> names;
  for (const Value& row : records) {
    for (const Field& f : row.as_record()) {
      if (std::find(names.begin(), names.end(), f.name) == names.end())
        names.push_back(f.name);
    }
  }
  if (names.empty()) names.push_back("value");

  // column type from the cells: homogeneous scalar kind, or text
  std::vector<Column> cols;
  for (const std::string& name : names) {
    TypeTag tag = TypeTag::Text;
    bool decided = false, mixed = false;
    bool saw_float = false;
    for (const Value& row : records) {
      const Value* cell = row.find(name);
      if (!cell || cell->is_null()) continue;
      TypeTag cell_tag;
      switch (cell->kind()) {
        case ValueKind::Bool: cell_tag = TypeTag::Bool; break;
        case ValueKind::Int: cell_tag = TypeTag::Int; break;
        case ValueKind::Float: cell_tag = TypeTag::Float; break;
        case ValueKind::Text: cell_tag = TypeTag::Text; break;
        default: cell_tag = TypeTag::Text; mixed = true; break;
      }
      if (cell_tag == TypeTag::Float) saw_float = true;
      if (!decided) {
        tag = cell_tag;
        decided = true;
      } else if (tag != cell_tag) {
        bool numeric_pair = (tag == TypeTag::Int || tag == TypeTag::Float) &&
                            (cell_tag == TypeTag::Int || cell_tag == TypeTag::Float);
        if (numeric_pair) {
          tag = TypeTag::Float;
        } else {
          mixed = true;
        }
      }
    }
    if (mixed) tag = TypeTag::Text;
    if (tag == TypeTag::Int && saw_float) tag = TypeTag::Float;
    cols.push_back({name, tag});
  }

  Table table;
  table.schema = Schema(std::move(cols));
  for (const Value& row : records) {
    Value::Record rec;
    for (const Column& col : table.schema.columns) {
      const Value* cell = row.find(col.name);
      Value v = cell ? *cell : Value::null();
      if (!v.is_null()) {
        switch (col.type) {
          case TypeTag::Float:
            if (v.kind() == ValueKind::Int) v = Value::real(v.as_float());
            break;
          case TypeTag::Text:
            if (v.kind() != ValueKind::Text) v = Value::text(render_scalar(v));
            break;
          default:
            break;
        }
      }
      rec.push_back({col.name, std::move(v)});
    }
    table.rows.push_back(Value::record(std::move(rec)));
  }
  return table;
}

namespace {

// a node output is either one value or a stream of per-record values
using NodeOutput = std::variant<Value, std::vector<Value>>;

bool is_stream(const NodeOutput& out) { return out.index() == 1; }

struct Execution {
  PhysicalPlan& plan;
  const RunOptions& options;
  RunContext& ctx;
  RunReport report;
  std::map<std::string, NodeOutput> outputs;
  std::function<double()> clock;

  Execution(PhysicalPlan& p, const RunOptions& o, RunContext& c) : plan(p), options(o), ctx(c) {
    clock = options.clock_ms ? options.clock_ms : [] {
      return std::chrono::duration<double, std::milli>(
                 std::chrono::steady_clock::now().time_since_epoch())
          .count();
    };
  }

  std::vector<const EdgeSpec*> incoming(const std::string& id) const {
    std::vector<const EdgeSpec*> out;
    for (const EdgeSpec& e : plan.edges) {
      if (e.to == id) out.push_back(&e);
    }
    return out;
  }

  Value invoke_checked(PhysicalModule& module, NodeStats& stats, const Value& input,
                       int64_t record_index) {
    double t0 = clock();
    try {
      Value out = module.invoke(input, ctx);
      stats.wall_ms += clock() - t0;
      return out;
    } catch (const Error& err) {
      stats.wall_ms += clock() - t0;
      std::string where = record_index >= 0
                              ? " record " + std::to_string(record_index)
                              : "";
      throw Error(ErrorCode::ModuleError,
                  "node " + stats.node + where + ": " + err.what());
    } catch (const std::exception& ex) {
      stats.wall_ms += clock() - t0;
      throw Error(ErrorCode::ModuleError,
                  "node " + stats.node +
                      (record_index >= 0 ? " record " + std::to_string(record_index) : "") +
                      ": " + ex.what());
    }
  }

  NodeOutput run_node(const std::string& id, PhysicalModule& module, NodeStats& stats,
                      const std::map<std::string, Value>& bound_inputs) {
    std::vector<const EdgeSpec*> edges_in = incoming(id);
    Shape in_shape = module.descriptor().input_shape;

    // joined input
    if (edges_in.empty()) {
      Value input = Value::null();
      auto it = bound_inputs.find(id);
      if (it != bound_inputs.end()) input = it->second;
      stats.records = 1;
      return invoke_checked(module, stats, input, -1);
    }

    if (edges_in.size() == 1) {
      const NodeOutput& upstream = outputs.at(edges_in[0]->from);
      if (is_stream(upstream)) {
        const auto& stream = std::get<std::vector<Value>>(upstream);
        if (in_shape == Shape::Table) {
          Value table = Value::table(std::make_shared<Table>(reassemble_rows(stream)));
          stats.records = 1;
          return invoke_checked(module, stats, table, -1);
        }
        return stream_through(module, stats, stream);
      }
      const Value& value = std::get<Value>(upstream);
      if (options.mode == RunMode::PerRecord && value.kind() == ValueKind::TableRef &&
          in_shape != Shape::Table && in_shape != Shape::None) {
        return stream_through(module, stats, value.as_table()->rows);
      }
      if (!value_matches_shape(value, in_shape)) {
        raise(ErrorCode::ShapeMismatch,
              "edge " + edges_in[0]->from + " -> " + id + ": " +
                  value_kind_name(value.kind()) + " output does not fit " +
                  shape_name(in_shape) + " input");
      }
      stats.records = 1;
      return invoke_checked(module, stats, value, -1);
    }

    // multiple inputs: join whole values, or zip equal-length streams
    bool any_stream = false, all_stream = true;
    for (const EdgeSpec* e : edges_in) {
      bool s = is_stream(outputs.at(e->from));
      any_stream = any_stream || s;
      all_stream = all_stream && s;
    }
    if (!any_stream) {
      Value::Record joined;
      for (const EdgeSpec* e : edges_in) {
        joined.push_back({e->from, std::get<Value>(outputs.at(e->from))});
      }
      stats.records = 1;
      return invoke_checked(module, stats, Value::record(std::move(joined)), -1);
    }
    if (!all_stream)
      raise(ErrorCode::ShapeMismatch,
            "node " + id + " joins streamed and whole inputs; bind them to the same mode");
    size_t length = std::get<std::vector<Value>>(outputs.at(edges_in[0]->from)).size();
    for (const EdgeSpec* e : edges_in) {
      if (std::get<std::vector<Value>>(outputs.at(e->from)).size() != length)
        raise(ErrorCode::ShapeMismatch, "node " + id + " joins streams of unequal length");
    }
    std::vector<Value> zipped;
    zipped.reserve(length);
    for (size_t k = 0; k < length; ++k) {
      Value::Record joined;
      for (const EdgeSpec* e : edges_in) {
        joined.push_back({e->from, std::get<std::vector<Value>>(outputs.at(e->from))[k]});
      }
      zipped.push_back(Value::record(std::move(joined)));
    }
    return stream_through(module, stats, zipped);
  }

  NodeOutput stream_through(PhysicalModule& module, NodeStats& stats,
                            const std::vector<Value>& rows) {
    std::vector<Value> result;
    result.reserve(rows.size());
    for (size_t k = 0; k < rows.size(); ++k) {
      ++stats.records;
      try {
        result.push_back(invoke_checked(module, stats, rows[k], static_cast<int64_t>(k)));
      } catch (const Error& err) {
        if (!options.skip_errors) throw;
        ++stats.errors;
        report.errors.push_back({stats.node, static_cast<int64_t>(k), err.what()});
      }
    }
    return result;
  }
};

}  // namespace

RunResult run(PhysicalPlan& plan, const std::map<std::string, Value>& inputs,
              const RunOptions& options, RunContext& ctx) {
  Execution exec(plan, options, ctx);
  exec.report.seed = options.seed;
  exec.report.run_id = options.run_id.empty()
                           ? plan.spec.name + "-" + std::to_string(options.seed)
                           : options.run_id;
  exec.report.backend_kind = ctx.backend ? ctx.backend->kind() : "none";
  exec.report.ledger_initial = ctx.ledger_ref().snapshot();

  LedgerSnapshot before_node = exec.report.ledger_initial;
  for (const auto& [id, module] : plan.order) {
    NodeStats stats;
    stats.node = id;
    exec.outputs[id] = exec.run_node(id, *module, stats, inputs);
    LedgerSnapshot after_node = ctx.ledger_ref().snapshot();
    stats.ledger_delta = after_node.diff_from(before_node);
    before_node = after_node;
    exec.report.nodes.push_back(std::move(stats));
  }
  exec.report.ledger_final = ctx.ledger_ref().snapshot();

  RunResult result;
  result.report = std::move(exec.report);
  for (const std::string& sink : plan.sinks()) {
    NodeOutput& out = exec.outputs.at(sink);
    if (is_stream(out)) {
      result.outputs[sink] =
          Value::table(std::make_shared<Table>(reassemble_rows(std::get<std::vector<Value>>(out))));
    } else {
      result.outputs[sink] = std::get<Value>(out);
    }
  }
  return result;
}

}  // namespace curator
