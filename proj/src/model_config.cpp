#include "gaitcont/models.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace gaitcont {

using nlohmann::json;

namespace {

double number(const json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) throw InputError(std::string("config key '") + key + "' must be a number");
    return v.get<double>();
}

CompassControl parse_control(const json& j) {
    if (j.contains("control")) {
        const std::string c = j.at("control").get<std::string>();
        if (c == "passive") return CompassControl::Passive;
        if (c == "sinusoidal_hip") return CompassControl::SinusoidalHip;
        if (c == "swing_vhc") return CompassControl::SwingVhc;
        throw InputError("unknown control '" + c + "' (expected passive, sinusoidal_hip or swing_vhc)");
    }
    if (j.contains("actuated") && j.at("actuated").get<bool>()) return CompassControl::SinusoidalHip;
    return CompassControl::Passive;
}

}  // namespace

std::shared_ptr<const GaitModel> load_model_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InputError(std::string("model config is not valid JSON: ") + e.what());
    }
    try {
        const std::string kind = j.value("model", std::string("compass_gait"));
        if (kind != "compass_gait") throw InputError("unknown model '" + kind + "'");

        CompassGaitParams p;
        if (j.contains("masses")) {
            p.m = number(j.at("masses"), "leg", p.m);
            p.m_H = number(j.at("masses"), "hip", p.m_H);
        }
        if (j.contains("lengths")) {
            p.a = number(j.at("lengths"), "a", p.a);
            p.b = number(j.at("lengths"), "b", p.b);
        }
        p.g = number(j, "gravity", p.g);

        ActuationSpec act;
        if (j.contains("actuation")) {
            act.omega = number(j.at("actuation"), "omega", act.omega);
            act.torque_scale = number(j.at("actuation"), "torque_scale", act.torque_scale);
        }
        VhcGains gains;
        if (j.contains("gains")) {
            gains.kp = number(j.at("gains"), "kp", gains.kp);
            gains.kd = number(j.at("gains"), "kd", gains.kd);
            gains.epsilon = number(j.at("gains"), "epsilon", gains.epsilon);
        }
        const int stance = j.value("stance_index", 1);
        return std::make_shared<CompassGait>(p, parse_control(j), act, gains, stance);
    } catch (const json::exception& e) {
        throw InputError(std::string("bad model config: ") + e.what());
    }
}

std::shared_ptr<const GaitModel> load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open model config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_model_json(ss.str());
}

std::string describe_model_json(const GaitModel& model) {
    json j;
    const auto* cg = dynamic_cast<const CompassGait*>(&model);
    if (!cg) {
        j["model"] = model.name();
        j["parameters"] = model.parameters();
        return j.dump();
    }
    const CompassGaitParams& p = cg->params();
    j["model"] = "compass_gait";
    switch (cg->control()) {
        case CompassControl::Passive: j["control"] = "passive"; break;
        case CompassControl::SinusoidalHip: j["control"] = "sinusoidal_hip"; break;
        case CompassControl::SwingVhc: j["control"] = "swing_vhc"; break;
    }
    j["masses"] = {{"leg", p.m}, {"hip", p.m_H}};
    j["lengths"] = {{"a", p.a}, {"b", p.b}};
    j["gravity"] = p.g;
    j["stance_index"] = cg->stance_index();
    if (cg->control() == CompassControl::SinusoidalHip)
        j["actuation"] = {{"omega", cg->actuation().omega}, {"torque_scale", cg->torque_scale()}};
    if (cg->control() == CompassControl::SwingVhc)
        j["gains"] = {{"kp", cg->vhc_gains().kp}, {"kd", cg->vhc_gains().kd}, {"epsilon", cg->vhc_gains().epsilon}};
    return j.dump();
}

}  // namespace gaitcont
