#include "support.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

namespace testing_support {

std::map<std::string, std::string> tree(const fs::path& root, const std::vector<std::string>& skip)
{
    std::map<std::string, std::string> out;
    for (auto it = fs::recursive_directory_iterator(root); it != fs::recursive_directory_iterator(); ++it) {
        auto rel = migmate::util::relative_generic(it->path(), root);
        auto top = rel.substr(0, rel.find('/'));
        if (std::find(skip.begin(), skip.end(), top) != skip.end()) {
            if (it->is_directory())
                it.disable_recursion_pending();
            continue;
        }
        if (it->is_regular_file())
            out[rel] = migmate::util::read_file(it->path());
    }
    return out;
}

std::string tree_hash(const fs::path& root, const std::vector<std::string>& skip)
{
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    for (const auto& [path, bytes] : tree(root, skip)) {
        std::string framed = path + '\0' + std::to_string(bytes.size()) + '\0';
        EVP_DigestUpdate(ctx, framed.data(), framed.size());
        EVP_DigestUpdate(ctx, bytes.data(), bytes.size());
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i)
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return hex.str();
}

migmate::process::Result run_migmate(const std::string& args, const fs::path& cwd, const std::string& env_prefix)
{
    std::string command = env_prefix + (env_prefix.empty() ? "" : " ") + migmate::util::shell_quote(binary().string()) +
                          " " + args + " </dev/null";
    return migmate::process::run_shell(command, cwd, std::chrono::seconds(120));
}

nlohmann::json load_json(const fs::path& path) { return nlohmann::json::parse(migmate::util::read_file(path)); }

nlohmann::json toml_json(const migmate::toml::Value& v)
{
    using migmate::toml::Kind;
    switch (v.kind) {
    case Kind::String:
    case Kind::Datetime: return v.text;
    case Kind::Integer: return std::stoll(migmate::util::replace_all(v.text, "_", ""), nullptr, 0);
    case Kind::Float: return std::stod(migmate::util::replace_all(v.text, "_", ""));
    case Kind::Boolean: return v.text == "true";
    case Kind::Array: {
        auto a = nlohmann::json::array();
        for (const auto& item : v.items)
            a.push_back(toml_json(item));
        return a;
    }
    case Kind::Table: {
        auto o = nlohmann::json::object();
        for (const auto& [k, f] : v.fields)
            o[k] = toml_json(f);
        return o;
    }
    }
    return nullptr;
}

} // namespace testing_support
