#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace scoopsim {

using MaterialId = std::uint8_t;

struct Rgb {
    double r = 0.0, g = 0.0, b = 0.0;
    bool operator==(const Rgb&) const = default;
};

// scoopability: fraction of a swept column actually collected (0 = rigid,
// unscoopable). roughness_amplitude/length parameterize the procedural
// surface texture, loosely following grain size.
struct MaterialSpec {
    MaterialId id = 0;
    std::string name;
    double scoopability = 1.0;       // [0, 1]
    double density = 1.0;            // g/cm^3
    double roughness_amplitude = 0;  // cm
    double roughness_length = 1.0;   // cm
    Rgb color;

    void validate() const {
        if (scoopability < 0.0 || scoopability > 1.0)
            throw std::invalid_argument("material '" + name + "': scoopability outside [0,1]");
        if (density <= 0.0)
            throw std::invalid_argument("material '" + name + "': density must be > 0");
        if (roughness_amplitude < 0.0)
            throw std::invalid_argument("material '" + name + "': roughness_amplitude < 0");
        if (roughness_length <= 0.0)
            throw std::invalid_argument("material '" + name + "': roughness_length must be > 0");
    }
};

class MaterialCatalog {
public:
    MaterialCatalog() = default;
    explicit MaterialCatalog(std::vector<MaterialSpec> mats) : materials_(std::move(mats)) {
        for (const auto& m : materials_) {
            m.validate();
            for (const auto& o : materials_)
                if (&m != &o && m.id == o.id)
                    throw std::invalid_argument("duplicate material id " + std::to_string(m.id));
        }
    }

    const MaterialSpec& by_id(MaterialId id) const {
        for (const auto& m : materials_)
            if (m.id == id) return m;
        throw std::out_of_range("unknown material id " + std::to_string(id));
    }

    const MaterialSpec& by_name(const std::string& name) const {
        for (const auto& m : materials_)
            if (m.name == name) return m;
        throw std::out_of_range("unknown material '" + name + "'");
    }

    bool has_id(MaterialId id) const {
        for (const auto& m : materials_)
            if (m.id == id) return true;
        return false;
    }

    const std::vector<MaterialSpec>& all() const { return materials_; }
    std::size_t size() const { return materials_.size(); }

private:
    std::vector<MaterialSpec> materials_;
};

// Desk-scale simulant analogs. Eight training materials plus the two
// deployment materials; the deployment pair shares one tan paint color and
// differs only in geometry and scoopability.
inline MaterialCatalog default_catalog() {
    std::vector<MaterialSpec> m = {
        {0, "sand", 0.90, 1.50, 0.15, 4.0, {0.87, 0.78, 0.48}},
        {1, "pebbles", 0.55, 1.70, 0.50, 2.0, {0.55, 0.56, 0.60}},
        {2, "slate", 0.30, 1.90, 0.80, 3.0, {0.35, 0.37, 0.40}},
        {3, "gravel", 0.60, 1.80, 0.65, 2.5, {0.62, 0.60, 0.57}},
        {4, "paper_balls", 0.45, 0.08, 1.50, 5.0, {0.92, 0.92, 0.90}},
        {5, "corn", 0.65, 0.75, 0.25, 1.5, {0.93, 0.79, 0.31}},
        {6, "shredded_cardboard", 0.55, 0.10, 1.10, 4.5, {0.72, 0.55, 0.36}},
        {7, "mulch", 0.75, 0.35, 0.90, 3.5, {0.48, 0.28, 0.18}},
        {8, "regolith", 0.85, 1.50, 0.12, 5.0, {0.71, 0.65, 0.54}},
        {9, "comet", 0.00, 1.30, 1.60, 3.0, {0.71, 0.65, 0.54}},
    };
    return MaterialCatalog(std::move(m));
}

inline const std::array<std::string, 8>& training_material_names() {
    static const std::array<std::string, 8> names = {
        "sand",        "pebbles", "slate",              "gravel",
        "paper_balls", "corn",    "shredded_cardboard", "mulch"};
    return names;
}

}  // namespace scoopsim
