#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "ham/dataset_io.hpp"
#include "ham/rng.hpp"

namespace ham {
namespace synthetic {

// Attribute pools. Every word here appears as a pattern in the default
// lexicon so masking a generated caption leaves only sentence structure.
inline constexpr std::array<std::string_view, 10> kColors = {
    "red",    "blue",   "green", "black", "white",
    "yellow", "purple", "orange", "brown", "grey"};
inline constexpr std::array<std::string_view, 8> kTops = {
    "shirt", "jacket", "coat", "dress", "sweater", "hoodie", "blouse", "vest"};
inline constexpr std::array<std::string_view, 5> kBottoms = {
    "jeans", "trousers", "shorts", "skirt", "pants"};
inline constexpr std::array<std::string_view, 5> kShoes = {
    "sneakers", "boots", "sandals", "loafers", "heels"};
inline constexpr std::array<std::string_view, 6> kPersons = {
    "man", "woman", "boy", "girl", "lady", "gentleman"};
inline constexpr std::array<std::string_view, 4> kAges = {
    "young", "elderly", "teenage", "adolescent"};
inline constexpr std::array<std::string_view, 5> kBags = {
    "backpack", "handbag", "satchel", "purse", "briefcase"};
inline constexpr std::array<std::string_view, 4> kHair = {
    "curly", "straight", "long", "short"};
// Scene words stay unmasked so captions inside one sentence shape still
// differ after masking.
inline constexpr std::array<std::string_view, 8> kPlaces = {
    "street", "park",  "station", "market",
    "plaza",  "lobby", "platform", "crosswalk"};

namespace detail {

template <size_t N>
std::string_view pick(const std::array<std::string_view, N>& pool, Rng& rng) {
    return pool[rng.bounded(N)];
}

}  // namespace detail

// Templated caption with one of several fixed sentence shapes. The shape
// index doubles as the nominal style of the caption.
inline std::string make_caption(size_t shape, Rng& rng) {
    using detail::pick;
    const std::string color1(pick(kColors, rng));
    const std::string color2(pick(kColors, rng));
    const std::string top(pick(kTops, rng));
    const std::string bottom(pick(kBottoms, rng));
    const std::string shoe(pick(kShoes, rng));
    const std::string person(pick(kPersons, rng));
    const std::string age(pick(kAges, rng));
    const std::string bag(pick(kBags, rng));
    const std::string hair(pick(kHair, rng));
    const std::string place(pick(kPlaces, rng));
    switch (shape % 6) {
        case 0:
            return "a " + age + " " + person + " wearing a " + color1 + " " + top +
                   " and " + color2 + " " + bottom + " at the " + place;
        case 1:
            return "the " + person + " has " + hair + " hair and carries a " + bag +
                   " across the " + place;
        case 2:
            return person + " dressed in a " + color1 + " " + top + ", " + color2 +
                   " " + bottom + " and " + shoe + " by the " + place;
        case 3:
            return "this " + age + " " + person + " is in a " + color1 + " " + top +
                   " with a " + bag + " near the " + place;
        case 4:
            return "you can see a " + person + " with " + hair + " hair wearing " +
                   color1 + " " + bottom + " and " + shoe + " on the " + place;
        default:
            return "picture of a " + person + " in " + color1 + " " + shoe +
                   " holding a " + bag + " beside the " + place;
    }
}

// Deterministic corpus: shapes cycle round-robin so shape counts are even,
// attribute choices come from the seeded stream. Two captions share each
// image id, mirroring multi-caption-per-image datasets.
inline std::vector<CaptionRecord> generate_captions(size_t count, uint64_t seed) {
    Rng rng(seed);
    std::vector<CaptionRecord> out;
    out.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        CaptionRecord rec;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "cap_%05zu", i);
        rec.id = buf;
        std::snprintf(buf, sizeof(buf), "img_%05zu", i / 2);
        rec.image_id = buf;
        rec.text = make_caption(i % 6, rng);
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace synthetic
}  // namespace ham
