// Copyright 2026 The mics Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * Generator for the shipped usefulness training set.
 *
 * Examples follow four answer patterns: a bare negation (neither useful), a
 * bare affirmation (question useful), a non-affirmative answer stating the
 * actual need (answer useful) and an affirmation followed by extra detail
 * (both useful). Class sizes follow the prevalence 32% / 11% / 53% / 6% for
 * labels 0 / 1 / 2 / 3. A small share of bare answers carry a trailing
 * non-polarity word ("No thanks.", "Yes please.") that looks like content.
 */
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mics/usefulness.hpp"

namespace mics {

/// Prevalence of labels 0..3 in percent.
inline constexpr std::array<double, 4> kAnnotationPrevalence{32.0, 11.0, 53.0, 6.0};

/// Largest-remainder apportionment of `total` examples over the prevalence
/// (which sums to 102, so it is normalized first).
inline std::array<std::size_t, 4> prevalence_counts(std::size_t total) {
    double sum = 0.0;
    for (double p : kAnnotationPrevalence) {
        sum += p;
    }
    std::array<std::size_t, 4> counts{};
    std::array<double, 4> remainder{};
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < 4; ++c) {
        const double exact = static_cast<double>(total) * kAnnotationPrevalence[c] / sum;
        counts[c] = static_cast<std::size_t>(std::floor(exact));
        remainder[c] = exact - std::floor(exact);
        assigned += counts[c];
    }
    while (assigned < total) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < 4; ++c) {
            if (remainder[c] > remainder[best]) {
                best = c;
            }
        }
        ++counts[best];
        remainder[best] = -1.0;
        ++assigned;
    }
    return counts;
}

namespace detail {

struct RequestTemplate {
    const char* query;
    const char* offered;  // what the clarifying question proposes
    const char* wanted;   // what the user actually needs
};

inline const std::vector<RequestTemplate>& request_templates() {
    static const std::vector<RequestTemplate> templates{
        {"I'm looking for information on hobby stores.", "hours of operation", "model train supplies nearby"},
        {"Tell me information about computer programming.", "a coding bootcamp", "what career options programmers have"},
        {"Find me map of USA.", "a map of US territories", "a road map of interstate highways"},
        {"All men are created equal", "the declaration of independence", "who wrote it"},
        {"Tell me about spiders.", "spiders in Europe", "which species are venomous"},
        {"I want to buy an aquarium.", "freshwater aquariums", "cleaning equipment for large tanks"},
        {"Information about diabetes.", "type 2 diabetes", "dietary guidelines for children"},
        {"Tell me about the Roman empire.", "the fall of Rome", "daily life of ordinary citizens"},
        {"How do I train for a marathon?", "a training schedule for beginners", "avoiding knee injuries during long runs"},
        {"Find recipes for sourdough bread.", "rye sourdough recipes", "keeping the starter alive while travelling"},
        {"I need information on solar panels.", "installation costs", "government rebates in California"},
        {"Tell me about volcanoes.", "active volcanoes in Iceland", "how eruptions are predicted"},
        {"What is the best way to learn guitar?", "online guitar lessons", "fingerpicking exercises for classical pieces"},
        {"Information about bonsai trees.", "indoor bonsai species", "pruning juniper branches"},
        {"Tell me about electric cars.", "charging station locations", "battery lifespan in cold climates"},
        {"I'm interested in the history of jazz.", "jazz in New Orleans", "bebop musicians of the forties"},
        {"Find information on adopting a dog.", "local animal shelters", "breeds suited to small apartments"},
        {"Tell me about the Great Barrier Reef.", "coral bleaching", "snorkeling tours from Cairns"},
        {"How does a mortgage work?", "mortgage calculators", "refinancing when interest rates drop"},
        {"Tell me about chess openings.", "the Sicilian defense", "openings suited to aggressive players"},
        {"Information on kidney stones.", "kidney stone symptoms", "foods that prevent recurrence"},
        {"I want to visit Japan.", "cherry blossom season", "rail passes for rural regions"},
        {"Tell me about black holes.", "images of black holes", "hawking radiation explained simply"},
        {"Find tips for growing tomatoes.", "tomato plant diseases", "growing them in containers on balconies"},
    };
    return templates;
}

inline const std::vector<const char*>& question_templates() {
    static const std::vector<const char*> t{
        "Do you want to know about {}?", "Are you interested in {}?", "Would you like to see {}?",
        "Are you looking for {}?", "Do you want information on {}?",
    };
    return t;
}

inline std::string fill(std::string pattern, const std::string& value) {
    auto pos = pattern.find("{}");
    if (pos != std::string::npos) {
        pattern.replace(pos, 2, value);
    }
    return pattern;
}

}  // namespace detail

/// Deterministic for a given seed: picks use raw mt19937_64 output so the
/// set does not depend on the standard library's distributions.
inline std::vector<AnnotatedExample> generate_annotations(std::size_t total = 150, std::uint64_t seed = 2023,
                                                          double hard_case_rate = 0.125) {
    std::mt19937_64 rng(seed);
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
    auto chance = [&](double p) { return static_cast<double>(rng() % 1000000) < p * 1000000.0; };

    static const std::vector<const char*> bare_negative{"No.", "No", "Nope.", "Nah.", "No!", "Nope, no."};
    static const std::vector<const char*> hard_negative{"No thanks.", "Not really.", "No, not that."};
    static const std::vector<const char*> bare_affirmative{"Yes.", "Yes", "Yeah.", "Yep.", "Sure.", "Correct.", "Yes!",
                                                           "Yeah, exactly."};
    static const std::vector<const char*> hard_affirmative{"Yes, that is what I'm looking for.", "Yes please."};
    static const std::vector<const char*> answer_useful{"No, I want to know about {}.", "No, I'm interested in {}.",
                                                        "I'd rather learn about {}.", "Not exactly, I need {}.",
                                                        "No, tell me about {} instead.", "Actually I am after {}."};
    static const std::vector<const char*> both_useful{"Yes, I'd like to know {}.", "Yes, especially {}.",
                                                      "Sure, and also {}.", "Yeah, mostly {}."};

    const auto counts = prevalence_counts(total);
    std::vector<AnnotatedExample> out;
    out.reserve(total);
    for (std::size_t label = 0; label < 4; ++label) {
        for (std::size_t i = 0; i < counts[label]; ++i) {
            const auto& req = detail::request_templates()[pick(detail::request_templates().size())];
            const auto& qt = detail::question_templates()[pick(detail::question_templates().size())];
            AnnotatedExample e;
            e.query = req.query;
            e.question = detail::fill(qt, req.offered);
            e.label = static_cast<UsefulnessLabel>(label);
            switch (label) {
            case 0:
                e.answer = chance(hard_case_rate) ? hard_negative[pick(hard_negative.size())]
                                                  : bare_negative[pick(bare_negative.size())];
                break;
            case 1:
                e.answer = chance(hard_case_rate) ? hard_affirmative[pick(hard_affirmative.size())]
                                                  : bare_affirmative[pick(bare_affirmative.size())];
                break;
            case 2:
                e.answer = detail::fill(answer_useful[pick(answer_useful.size())], req.wanted);
                break;
            default:
                e.answer = detail::fill(both_useful[pick(both_useful.size())], req.wanted);
                break;
            }
            out.push_back(std::move(e));
        }
    }
    for (std::size_t i = out.size(); i > 1; --i) {
        std::swap(out[i - 1], out[pick(i)]);
    }
    return out;
}

}  // namespace mics
