#include <cinttypes>
#include <cstdio>
#include <sstream>

#include "rlab/operators.hpp"

namespace rlab::ops {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    std::string s(buf);
    // Ensure the token re-parses as a float, not an integer.
    if (s.find_first_of(".eEnN") == std::string::npos) s += ".0";
    return s;
}

const char* kind_name(OpKind k) {
    switch (k) {
        case OpKind::Identity: return "identity";
        case OpKind::ScalarMul: return "scalar-mul";
        case OpKind::BackwardShift: return "backward-shift";
        case OpKind::CTypeWB: return "ctype-wb";
        case OpKind::CTypeFull: return "ctype-full";
        case OpKind::CompactK: return "compact-k";
        case OpKind::DirectSum: return "direct-sum";
        case OpKind::Complexified: return "complexified";
    }
    return "?";
}

void emit_double_array(std::ostringstream& out, const char* key,
                       const std::vector<double>& a) {
    out << key << " = [";
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (i) out << ", ";
        out << fmt_double(a[i]);
    }
    out << "]\n";
}

void emit_size_array(std::ostringstream& out, const char* key,
                     const std::vector<std::size_t>& a) {
    out << key << " = [";
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (i) out << ", ";
        out << a[i];
    }
    out << "]\n";
}

void emit(std::ostringstream& out, const OperatorSpec& s, const std::string& path) {
    out << "[" << path << "]\n";
    out << "kind = \"" << kind_name(s.kind) << "\"\n";
    out << "field = \"" << (s.field == FieldMode::Real ? "real" : "complex") << "\"\n";
    if (s.mode.sup) {
        out << "norm = \"sup\"\n";
    } else {
        out << "p = " << fmt_double(s.mode.p) << "\n";
    }
    out << "dim = " << s.dim << "\n";
    switch (s.kind) {
        case OpKind::ScalarMul:
            out << "lambda_re = " << fmt_double(s.lambda.real()) << "\n";
            out << "lambda_im = " << fmt_double(s.lambda.imag()) << "\n";
            break;
        case OpKind::BackwardShift:
            emit_double_array(out, "weights", s.weights);
            break;
        case OpKind::CTypeWB:
        case OpKind::CTypeFull:
        case OpKind::CompactK:
            emit_size_array(out, "b", s.ct->b);
            emit_size_array(out, "phi", s.ct->phi);
            emit_double_array(out, "w", s.ct->w);
            emit_double_array(out, "v", s.ct->v);
            break;
        default:
            break;
    }
    if (s.kind == OpKind::DirectSum) {
        emit(out, s.children[0], path + ".left");
        emit(out, s.children[1], path + ".right");
    } else if (s.kind == OpKind::Complexified) {
        emit(out, s.children[0], path + ".inner");
    }
}

std::vector<std::size_t> get_size_array(const toml::Table& t, const char* key) {
    std::vector<std::size_t> out;
    for (std::int64_t v : toml::as_int_array(toml::require_array(t, key), key)) {
        if (v < 0) throw toml::ParseError(std::string(key) + ": negative entry");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

std::shared_ptr<const ctype::CTypeData> ctype_from_table(const toml::Table& t) {
    if (const toml::Value* preset = toml::find(t, "preset")) {
        const std::string name = preset->as_string();
        const std::int64_t blocks = toml::require_int(t, "blocks");
        if (blocks < 1) throw toml::ParseError("blocks: must be positive");
        ctype::CTypeData data;
        if (name == "capped-doubling") {
            data = ctype::capped_doubling(static_cast<std::size_t>(blocks));
        } else if (name == "uncapped-doubling") {
            data = ctype::uncapped_doubling(static_cast<std::size_t>(blocks));
        } else {
            throw toml::ParseError("unknown preset '" + name + "'");
        }
        return std::make_shared<ctype::CTypeData>(std::move(data));
    }
    auto data = std::make_shared<ctype::CTypeData>();
    data->b = get_size_array(t, "b");
    data->phi = get_size_array(t, "phi");
    data->w = toml::as_double_array(toml::require_array(t, "w"), "w");
    data->v = toml::as_double_array(toml::require_array(t, "v"), "v");
    // Hard shape requirements (the operator rows index through these); the
    // softer admissibility conditions are reported by validate() instead.
    if (data->b.size() < 2 || data->b.front() != 0) {
        throw toml::ParseError("b: must start at 0 with at least one block");
    }
    for (std::size_t i = 0; i + 1 < data->b.size(); ++i) {
        if (data->b[i + 1] <= data->b[i]) throw toml::ParseError("b: must strictly increase");
    }
    const std::size_t m = data->blocks();
    if (data->phi.size() != m) throw toml::ParseError("phi: expected one entry per block");
    for (std::size_t n = 0; n < m; ++n) {
        if (data->phi[n] >= m) throw toml::ParseError("phi: target outside stored blocks");
    }
    if (data->w.size() != data->dim()) throw toml::ParseError("w: expected one entry per coordinate");
    if (data->v.size() != m) throw toml::ParseError("v: expected one entry per block");
    return data;
}

OperatorSpec parse_spec(const toml::Table& t, FieldMode inherited_field,
                        NormMode inherited_mode) {
    const std::string kind = toml::require_string(t, "kind");

    FieldMode field = inherited_field;
    if (const toml::Value* f = toml::find(t, "field")) {
        const std::string name = f->as_string();
        if (name == "real") field = FieldMode::Real;
        else if (name == "complex") field = FieldMode::Complex;
        else throw toml::ParseError("field: expected \"real\" or \"complex\"");
    }
    NormMode mode = inherited_mode;
    if (const toml::Value* nm = toml::find(t, "norm")) {
        const std::string name = nm->as_string();
        if (name == "sup") mode = NormMode::sup_norm();
        else if (name == "lp") mode = NormMode::lp(toml::require_double(t, "p"));
        else throw toml::ParseError("norm: expected \"lp\" or \"sup\"");
    } else if (const toml::Value* p = toml::find(t, "p")) {
        mode = NormMode::lp(p->as_double());
    }

    const auto dim_of = [&](bool required) -> std::size_t {
        const toml::Value* d = toml::find(t, "dim");
        if (!d) {
            if (required) throw toml::ParseError("dim: required for kind '" + kind + "'");
            return 0;
        }
        const std::int64_t v = d->as_int();
        if (v < 1) throw toml::ParseError("dim: must be positive");
        return static_cast<std::size_t>(v);
    };

    if (kind == "identity") return make_identity(dim_of(true), field, mode);
    if (kind == "scalar-mul") {
        const cx lambda(toml::get_double(t, "lambda_re", 1.0),
                        toml::get_double(t, "lambda_im", 0.0));
        return make_scalar_mul(lambda, dim_of(true), field, mode);
    }
    if (kind == "backward-shift") {
        if (const toml::Value* ws = toml::find(t, "weights")) {
            return make_backward_shift(toml::as_double_array(ws->as_array(), "weights"), field,
                                       mode);
        }
        const double w = toml::get_double(t, "weight", 1.0);
        return make_backward_shift_uniform(w, dim_of(true), field, mode);
    }
    if (kind == "ctype-wb" || kind == "ctype-full" || kind == "compact-k") {
        auto data = ctype_from_table(t);
        const std::size_t dim = dim_of(false);
        if (kind == "ctype-wb") return make_ctype_wb(std::move(data), dim, field, mode);
        if (kind == "ctype-full") return make_ctype_full(std::move(data), dim, field, mode);
        return make_compact_k(std::move(data), dim, field, mode);
    }
    if (kind == "direct-sum") {
        return make_direct_sum(parse_spec(toml::require_table(t, "left"), field, mode),
                               parse_spec(toml::require_table(t, "right"), field, mode));
    }
    if (kind == "complexified") {
        return complexify(parse_spec(toml::require_table(t, "inner"), field, mode));
    }
    throw toml::ParseError("unknown operator kind '" + kind + "'");
}

} // namespace

std::string to_toml(const OperatorSpec& spec) {
    std::ostringstream out;
    emit(out, spec, "operator");
    return out.str();
}

OperatorSpec from_toml(const toml::Table& operator_table) {
    return parse_spec(operator_table, FieldMode::Real, NormMode::lp(2.0));
}

OperatorSpec from_toml_text(const std::string& text) {
    const toml::Table doc = toml::parse(text);
    return from_toml(toml::require_table(doc, "operator"));
}

} // namespace rlab::ops
