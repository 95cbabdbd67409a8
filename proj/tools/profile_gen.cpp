// Build-time generator: reads the seed corpora and emits a C++ source file
// holding one trigram count table per language.
//
//   profile_gen OUT.cpp LANG=path [LANG=path ...]

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "locaudit/language_id.hpp"

namespace {

std::string escape(const std::string& s) {
    std::string out;
    for (unsigned char c : s) {
        if (c == '"' || c == '\\') {
            out += '\\';
            out += static_cast<char>(c);
        } else if (c < 0x20 || c >= 0x7F) {
            char buf[8];
            std::snprintf(buf, sizeof buf, "\\x%02X\"\"", c);
            out += buf;
        } else {
            out += static_cast<char>(c);
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::cerr << "usage: profile_gen OUT.cpp LANG=corpus.txt...\n";
        return 2;
    }
    std::ostringstream src;
    src << "// Generated by profile_gen. Do not edit.\n"
        << "#include \"locaudit/language_id.hpp\"\n\nnamespace locaudit {\nnamespace {\n";
    std::ostringstream table;
    for (int i = 2; i < argc; ++i) {
        std::string arg = argv[i];
        auto eq = arg.find('=');
        if (eq == std::string::npos) {
            std::cerr << "bad argument " << arg << "\n";
            return 2;
        }
        const std::string lang = arg.substr(0, eq);
        std::ifstream in(arg.substr(eq + 1), std::ios::binary);
        if (!in) {
            std::cerr << "cannot read " << arg.substr(eq + 1) << "\n";
            return 1;
        }
        std::stringstream corpus;
        corpus << in.rdbuf();
        const auto counts = locaudit::extract_trigrams(corpus.str());
        src << "const TrigramEntry k_" << lang << "[] = {\n";
        for (const auto& [tri, n] : counts) src << "    {\"" << escape(tri) << "\", " << n << "},\n";
        src << "};\n";
        table << "    {\"" << lang << "\", k_" << lang << "},\n";
    }
    src << "const LanguageProfile kProfiles[] = {\n" << table.str() << "};\n}  // namespace\n\n"
        << "std::span<const LanguageProfile> builtin_profiles() { return kProfiles; }\n\n"
        << "}  // namespace locaudit\n";

    std::ofstream out(argv[1], std::ios::binary | std::ios::trunc);
    out << src.str();
    return out ? 0 : 1;
}
