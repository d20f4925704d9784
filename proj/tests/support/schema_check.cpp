#include "schema_check.hpp"

#include <fstream>

namespace testing {

namespace {

bool type_matches(const std::string& type, const nlohmann::json& v) {
    if (type == "object") return v.is_object();
    if (type == "array") return v.is_array();
    if (type == "string") return v.is_string();
    if (type == "integer") return v.is_number_integer() || (v.is_number_float() && v.get<double>() == static_cast<long long>(v.get<double>()));
    if (type == "number") return v.is_number();
    if (type == "boolean") return v.is_boolean();
    if (type == "null") return v.is_null();
    return false;
}

} // namespace

nlohmann::json SchemaSet::load(const std::string& file) const {
    std::ifstream in(dir_ / file);
    if (!in) throw std::runtime_error("missing schema " + file);
    return nlohmann::json::parse(in);
}

std::vector<std::string> SchemaSet::check(const std::string& schema_file, const nlohmann::json& instance) const {
    const auto schema = load(schema_file);
    std::vector<std::string> out;
    walk(schema, schema, instance, "$", out);
    return out;
}

void SchemaSet::walk(const nlohmann::json& schema, const nlohmann::json& root, const nlohmann::json& value,
                     const std::string& path, std::vector<std::string>& out) const {
    if (schema.is_boolean()) {
        if (!schema.get<bool>()) out.push_back(path + ": not allowed");
        return;
    }
    if (auto ref = schema.find("$ref"); ref != schema.end()) {
        const auto target = ref->get<std::string>();
        const auto hash = target.find('#');
        const auto file = target.substr(0, hash);
        const auto other = file.empty() ? root : load(file);
        if (hash == std::string::npos) {
            walk(other, other, value, path, out);
        } else {
            const auto pointer = nlohmann::json::json_pointer(target.substr(hash + 1));
            walk(other.at(pointer), other, value, path, out);
        }
        return;
    }
    if (auto t = schema.find("type"); t != schema.end()) {
        bool ok = false;
        if (t->is_array()) {
            for (const auto& each : *t) ok = ok || type_matches(each.get<std::string>(), value);
        } else {
            ok = type_matches(t->get<std::string>(), value);
        }
        if (!ok) {
            out.push_back(path + ": expected type " + t->dump() + ", got " + value.type_name());
            return;
        }
    }
    if (auto e = schema.find("enum"); e != schema.end()) {
        if (std::find(e->begin(), e->end(), value) == e->end()) out.push_back(path + ": " + value.dump() + " not in enum");
    }
    if (auto c = schema.find("const"); c != schema.end() && *c != value) out.push_back(path + ": expected " + c->dump());
    if (value.is_number()) {
        if (auto m = schema.find("minimum"); m != schema.end() && value.get<double>() < m->get<double>()) {
            out.push_back(path + ": below minimum");
        }
        if (auto m = schema.find("maximum"); m != schema.end() && value.get<double>() > m->get<double>()) {
            out.push_back(path + ": above maximum");
        }
    }
    if (value.is_object()) {
        if (auto req = schema.find("required"); req != schema.end()) {
            for (const auto& k : *req) {
                if (!value.contains(k.get<std::string>())) out.push_back(path + ": missing " + k.get<std::string>());
            }
        }
        const auto props = schema.find("properties");
        const auto extra = schema.find("additionalProperties");
        for (const auto& [k, v] : value.items()) {
            if (props != schema.end() && props->contains(k)) {
                walk((*props)[k], root, v, path + "." + k, out);
            } else if (extra != schema.end()) {
                if (extra->is_boolean() && !extra->get<bool>()) {
                    out.push_back(path + ": unexpected property " + k);
                } else if (extra->is_object()) {
                    walk(*extra, root, v, path + "." + k, out);
                }
            }
        }
    }
    if (value.is_array()) {
        if (auto m = schema.find("minItems"); m != schema.end() && value.size() < m->get<std::size_t>()) {
            out.push_back(path + ": too few items");
        }
        if (auto items = schema.find("items"); items != schema.end()) {
            for (std::size_t i = 0; i < value.size(); ++i) walk(*items, root, value[i], path + "[" + std::to_string(i) + "]", out);
        }
    }
}

} // namespace testing
