#include "graphixs/io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace graphixs {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json vec3_to_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }
json vec4_to_json(const Vec4& v) { return json::array({v[0], v[1], v[2], v[3]}); }

Vec3 vec3_from_json(const json& j) { return Vec3(j.at(0), j.at(1), j.at(2)); }
Vec4 vec4_from_json(const json& j) { return Vec4(j.at(0), j.at(1), j.at(2), j.at(3)); }

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
}

json read_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    json doc;
    in >> doc;
    return doc;
}

} // namespace

json scene_to_json(const ComponentSet& set, const Provenance& provenance) {
    json doc;
    doc["format_version"] = 1;
    doc["kernel_kind"] = to_string(set.kernel_kind);
    doc["sh_degree"] = set.sh_degree;
    doc["count"] = set.components.size();
    if (!provenance.is_null() && !provenance.empty()) doc["provenance"] = provenance;

    json comps = json::array();
    for (const auto& c : set.components) {
        json rec;
        rec["mu"] = vec3_to_json(c.mu);
        rec["rot"] = vec4_to_json(c.rot);
        rec["log_scale"] = vec3_to_json(c.log_scale);
        rec["opacity_logit"] = c.opacity_logit;
        json sh = json::array();
        for (const auto& coeff : c.sh) sh.push_back(vec3_to_json(coeff));
        rec["sh"] = sh;
        rec["g"] = c.g;
        rec["u"] = c.u;
        rec["v"] = vec3_to_json(c.v);
        rec["a"] = vec3_to_json(c.a);
        rec["j"] = vec3_to_json(c.j);
        rec["s"] = vec3_to_json(c.s);
        rec["nu"] = c.nu;
        comps.push_back(std::move(rec));
    }
    doc["components"] = std::move(comps);
    return doc;
}

ComponentSet scene_from_json(const json& doc) {
    ComponentSet set;
    set.kernel_kind = kernel_kind_from_string(doc.at("kernel_kind"));
    set.sh_degree = doc.at("sh_degree");
    for (const auto& rec : doc.at("components")) {
        Component c;
        c.mu = vec3_from_json(rec.at("mu"));
        c.rot = vec4_from_json(rec.at("rot"));
        c.log_scale = vec3_from_json(rec.at("log_scale"));
        c.opacity_logit = rec.at("opacity_logit");
        c.sh.clear();
        for (const auto& coeff : rec.at("sh")) c.sh.push_back(vec3_from_json(coeff));
        c.g = rec.at("g");
        c.u = rec.at("u");
        c.v = vec3_from_json(rec.at("v"));
        c.a = vec3_from_json(rec.at("a"));
        c.j = vec3_from_json(rec.at("j"));
        c.s = vec3_from_json(rec.at("s"));
        c.nu = rec.at("nu");
        set.components.push_back(std::move(c));
    }
    if (doc.contains("count") &&
        doc.at("count").get<std::size_t>() != set.components.size())
        throw std::runtime_error("scene file count does not match component records");
    return set;
}

void save_scene(const ComponentSet& set, const std::string& path,
                const Provenance& provenance) {
    write_text(path, scene_to_json(set, provenance).dump(2) + "\n");
}

ComponentSet load_scene(const std::string& path) {
    return scene_from_json(read_json(path));
}

Provenance load_scene_provenance(const std::string& path) {
    json doc = read_json(path);
    return doc.contains("provenance") ? doc["provenance"] : json();
}

json manifest_to_json(const DatasetManifest& m, const Provenance& provenance) {
    json doc;
    doc["format_version"] = 1;
    doc["duration"] = m.duration;
    doc["nominal_fps"] = m.nominal_fps;
    doc["degradations"] = m.degradation_chain;
    if (!provenance.is_null() && !provenance.empty()) doc["provenance"] = provenance;

    json cams = json::array();
    for (const auto& cam : m.cameras) {
        json rec;
        rec["id"] = cam.id;
        rec["fx"] = cam.fx;
        rec["fy"] = cam.fy;
        rec["cx"] = cam.cx;
        rec["cy"] = cam.cy;
        rec["width"] = cam.width;
        rec["height"] = cam.height;
        json rot = json::array();
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) rot.push_back(cam.rotation(r, c));
        rec["world_to_cam"] = {{"rotation", rot},
                               {"translation", vec3_to_json(cam.translation)}};
        rec["fps"] = cam.fps;
        rec["is_holdout"] = cam.is_holdout;
        cams.push_back(std::move(rec));
    }
    doc["cameras"] = std::move(cams);

    json frames = json::array();
    for (const auto& f : m.frames)
        frames.push_back({{"camera_id", f.camera_id},
                          {"timestamp", f.timestamp},
                          {"image", f.image_path}});
    doc["frames"] = std::move(frames);
    return doc;
}

DatasetManifest manifest_from_json(const json& doc) {
    DatasetManifest m;
    m.duration = doc.at("duration");
    m.nominal_fps = doc.at("nominal_fps");
    if (doc.contains("degradations"))
        m.degradation_chain = doc["degradations"].get<std::vector<std::string>>();

    for (const auto& rec : doc.at("cameras")) {
        CameraModel cam;
        cam.id = rec.at("id");
        cam.fx = rec.at("fx");
        cam.fy = rec.at("fy");
        cam.cx = rec.at("cx");
        cam.cy = rec.at("cy");
        cam.width = rec.at("width");
        cam.height = rec.at("height");
        const auto& pose = rec.at("world_to_cam");
        const auto& rot = pose.at("rotation");
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) cam.rotation(r, c) = rot.at(r * 3 + c);
        cam.translation = vec3_from_json(pose.at("translation"));
        cam.fps = rec.at("fps");
        cam.is_holdout = rec.at("is_holdout");
        m.cameras.push_back(std::move(cam));
    }

    for (const auto& rec : doc.at("frames")) {
        FrameObservation f;
        f.camera_id = rec.at("camera_id");
        f.timestamp = rec.at("timestamp");
        f.image_path = rec.at("image");
        m.frames.push_back(std::move(f));
    }
    return m;
}

void save_manifest(const DatasetManifest& m, const std::string& path,
                   const Provenance& provenance) {
    const fs::path out_dir = fs::absolute(fs::path(path)).parent_path();
    DatasetManifest rewritten = m;
    if (!m.base_dir.empty()) {
        // keep image references valid from the new manifest location
        for (auto& f : rewritten.frames) {
            const fs::path abs = fs::path(m.base_dir) / f.image_path;
            f.image_path = fs::relative(abs, out_dir).string();
        }
    }
    write_text(path, manifest_to_json(rewritten, provenance).dump(2) + "\n");
}

DatasetManifest load_manifest(const std::string& path) {
    DatasetManifest m = manifest_from_json(read_json(path));
    m.base_dir = fs::absolute(fs::path(path)).parent_path().string();
    return m;
}

std::string resolve_image_path(const DatasetManifest& m, const FrameObservation& f) {
    if (m.base_dir.empty()) return f.image_path;
    return (fs::path(m.base_dir) / f.image_path).string();
}

Image load_frame_image(const DatasetManifest& m, const FrameObservation& f) {
    return load_ppm(resolve_image_path(m, f));
}

void save_ppm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            for (int ch = 0; ch < 3; ++ch) {
                const double v = std::clamp(img.at(x, y, ch), 0.0, 1.0);
                row[static_cast<std::size_t>(x) * 3 + ch] =
                    static_cast<unsigned char>(std::lround(v * 255.0));
            }
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

Image load_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string magic;
    in >> magic;
    if (magic != "P6") throw std::runtime_error("not a binary PPM: " + path);

    auto next_token = [&in, &path]() {
        std::string tok;
        while (in >> tok) {
            if (tok[0] == '#') {
                std::string rest;
                std::getline(in, rest);
                continue;
            }
            return tok;
        }
        throw std::runtime_error("truncated PPM header: " + path);
    };

    const int w = std::stoi(next_token());
    const int h = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (maxval != 255) throw std::runtime_error("unsupported PPM maxval: " + path);
    in.get(); // single whitespace after header

    Image img(w, h);
    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * 3);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw std::runtime_error("truncated PPM data: " + path);
    for (std::size_t i = 0; i < raw.size(); ++i)
        img.pixels[i] = raw[i] / 255.0;
    return img;
}

Image quantize_8bit(const Image& img) {
    Image out = img;
    for (auto& v : out.pixels)
        v = std::lround(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
    return out;
}

std::uint64_t content_hash(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace graphixs
